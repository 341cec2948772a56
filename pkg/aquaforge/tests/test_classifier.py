"""
분류기 / 복원 네트워크 학습·추론 테스트 (작은 합성 데이터셋)
"""

import numpy as np
import pytest

from aquaforge.degradation.dataset import build_dataset
from aquaforge.errors import DegradationError, IncompleteSuiteError
from aquaforge.imaging.core import ImageF
from aquaforge.models import DegradationClass, EnhancerId, EnhancerSuite, TrainConfig
from aquaforge.networks.classifier import (
    DegradationClassifier,
    build_classifier,
    classify,
    evaluate,
    output_from_logits,
    summarize_predictions,
    train_classifier,
)
from aquaforge.networks.enhancers import (
    EnhancerBank,
    build_cb,
    enhance,
    enhance_batch,
    enhancer_for,
    train_enhancer,
)
from aquaforge.nn.checkpoint import Checkpoint, save_checkpoint
from aquaforge.nn.engine import Network


@pytest.fixture
def small_manifest(reference_dir, tmp_path):
    return build_dataset(reference_dir, tmp_path / 'ds', master_seed=1, side=16, threads=2)


def test_winner_take_all_tie_breaks_to_lowest_code():
    out = output_from_logits([0.0] * 9)
    assert out.predicted == DegradationClass.NO_DEGRADATION
    assert out.confidence == pytest.approx(1 / 9)

    logits = [0.0, 1.0, 3.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    assert output_from_logits(logits).predicted == DegradationClass.HIGH_CONTRAST


def test_summarize_predictions():
    summary = summarize_predictions([0, 1, 2, 2], [0, 1, 2, 1])
    assert summary.accuracy == pytest.approx(0.75)
    assert summary.f1[0] == pytest.approx(1.0)
    assert summary.f1[1] == pytest.approx(2 / 3)
    assert summary.f1[2] == pytest.approx(2 / 3)
    assert summary.f1[5] == 0.0
    assert summary.macro_f1 == pytest.approx((1 + 2 / 3 + 2 / 3) / 9)
    assert summary.confusion[2][1] == 1
    assert summary.support[:3] == [1, 1, 2]
    assert summary.f1_table()['Contrast'] == pytest.approx(2 / 3)


def test_classifier_on_any_image_size(rng):
    checkpoint = Checkpoint(network=Network(build_classifier(16), seed=0))
    classifier = DegradationClassifier(checkpoint)
    assert classifier.input_side == 16

    out = classifier(ImageF(rng.uniform(size=(20, 30, 3))))
    assert len(out.logits) == 9
    assert 0.0 < out.confidence <= 1.0
    assert classify(checkpoint, ImageF(rng.uniform(size=(16, 16, 3)))).predicted in DegradationClass


def test_train_and_evaluate_classifier(small_manifest, tmp_path):
    config = TrainConfig(epochs=1, batch_size=16, seed=2)
    checkpoint = train_classifier(small_manifest, config, input_side=16, blocks=1, progress=False)
    assert checkpoint.metadata['kind'] == 'classifier'
    assert checkpoint.network.count_params() == 103_433

    path = save_checkpoint(checkpoint, tmp_path / 'classifier.aqfn')
    summary = evaluate(path, small_manifest, split='train')
    assert 0.0 <= summary.accuracy <= 1.0
    assert sum(summary.support) == sum(sum(row) for row in summary.confusion)


def test_train_enhancer_uses_served_classes(small_manifest):
    config = TrainConfig(epochs=1, batch_size=8, seed=4, loss='cross_entropy')
    checkpoint = train_enhancer(EnhancerId.CB_R, small_manifest, config, input_side=16, progress=False)
    assert checkpoint.metadata['kind'] == 'CB_R'
    assert checkpoint.metadata['serves'] == ['reddish']
    assert checkpoint.definition.name == 'CB'

    dhce = train_enhancer(EnhancerId.DHCE, small_manifest, TrainConfig(epochs=1), input_side=16, progress=False)
    assert set(dhce.metadata['serves']) == {'contrast', 'hazy'}


def test_enhancer_routing():
    assert enhancer_for(DegradationClass.HAZY) == EnhancerId.DHCE
    assert enhancer_for(DegradationClass.HIGH_CONTRAST) == EnhancerId.DHCE
    assert enhancer_for(DegradationClass.GREENISH) == EnhancerId.CB_G
    with pytest.raises(DegradationError):
        enhancer_for(DegradationClass.NO_DEGRADATION)


def test_enhancer_bank(tmp_path, rng):
    networks = {e: Network(build_cb(16), seed=i) for i, e in enumerate(EnhancerId)}
    bank = EnhancerBank(networks, input_side=16)
    img = ImageF(rng.uniform(size=(24, 24, 3)))

    out = bank(DegradationClass.NOISY, img)
    assert out.shape == img.shape
    assert np.array_equal(enhance(bank, DegradationClass.NOISY, img).data, out.data)
    assert enhance_batch(networks[EnhancerId.DN], [img, img], 16)[1].shape == (16, 16, 3)

    partial = dict(networks)
    del partial[EnhancerId.DB]
    with pytest.raises(IncompleteSuiteError):
        EnhancerBank(partial, input_side=16)


def test_enhance_keeps_input_size(rng):
    networks = {e: Network(build_cb(16), seed=i) for i, e in enumerate(EnhancerId)}
    bank = EnhancerBank(networks, input_side=16)

    wide = ImageF(np.full((24, 40, 3), 0.5))
    assert enhance(bank, DegradationClass.NOISY, wide).shape == (24, 40, 3)

    # 네트워크 크기 입력은 리샘플링 없이 그대로 통과
    native = ImageF(rng.uniform(size=(16, 16, 3)))
    direct = np.clip(networks[EnhancerId.DN].forward(native.data.transpose(2, 0, 1)[None])[0], 0.0, 1.0)
    out = enhance(bank, DegradationClass.NOISY, native)
    assert np.allclose(out.data, direct.transpose(1, 2, 0))


def test_suite_loading(tmp_path):
    checkpoints = {}
    for e in EnhancerId:
        checkpoints[e] = save_checkpoint(Checkpoint(network=Network(build_cb(16))), tmp_path / f"{e.value}.aqfn")

    bank = EnhancerBank.from_suite(EnhancerSuite(checkpoints=checkpoints, input_side=16))
    assert set(bank.networks) == set(EnhancerId)

    del checkpoints[EnhancerId.IC]
    with pytest.raises(IncompleteSuiteError):
        EnhancerBank.from_suite(EnhancerSuite(checkpoints=checkpoints, input_side=16))
