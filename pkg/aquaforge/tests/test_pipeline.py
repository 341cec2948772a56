"""
반복 개선 파이프라인 테스트 (분류기/복원 네트워크는 스텁)
"""

import csv
import json

import numpy as np
import pytest

from aquaforge.errors import ConfigError
from aquaforge.imaging.core import ImageF
from aquaforge.models import (
    DegradationClass,
    EnhancerId,
    EnhancerSuite,
    IterationRecord,
    IterationTrace,
    PipelineConfig,
    StopReason,
)
from aquaforge.networks.classifier import build_classifier, output_from_logits
from aquaforge.networks.enhancers import build_cb
from aquaforge.nn.checkpoint import Checkpoint, save_checkpoint
from aquaforge.nn.engine import Network
from aquaforge.pipeline.ida import (
    PROPORTION_COLUMNS,
    BatchItem,
    IterativeEnhancer,
    PipelineResult,
    failure_scan,
    iteration_proportions,
    load_pipeline,
    psnr_curve,
    write_trace,
)

CLEAN = DegradationClass.NO_DEGRADATION
NOISY = DegradationClass.NOISY
HAZY = DegradationClass.HAZY


def one_hot(degradation):
    logits = [0.0] * 9
    logits[int(degradation)] = 5.0
    return output_from_logits(logits)


class ScriptedClassifier:
    """정해진 순서대로 예측 (목록이 끝나면 마지막 값 반복)"""

    def __init__(self, *sequence):
        self.sequence = list(sequence)
        self.calls = 0

    def __call__(self, img):
        index = min(self.calls, len(self.sequence) - 1)
        self.calls += 1
        return one_hot(self.sequence[index])


class RecordingEnhancer:
    """호출 기록 + 영상을 일정 비율로 어둡게"""

    def __init__(self, factor=0.9):
        self.factor = factor
        self.calls = []

    def __call__(self, degradation, img):
        self.calls.append(degradation)
        return ImageF(img.data * self.factor)


@pytest.fixture
def image(rgb_image):
    return rgb_image


def test_clean_input_stops_immediately(image):
    enhancer = RecordingEnhancer()
    result = IterativeEnhancer(ScriptedClassifier(CLEAN), enhancer).run(image, image_id='a')

    assert result.trace.stop_reason == StopReason.NO_DEGRADATION
    assert len(result.trace.iterations) == 1
    assert result.trace.iterations[0].enhancer is None
    assert enhancer.calls == []
    assert np.array_equal(result.image.data, image.data)


def test_persistent_degradation_hits_iteration_limit(image):
    enhancer = RecordingEnhancer()
    result = IterativeEnhancer(ScriptedClassifier(NOISY), enhancer, max_iterations=3).run(image)

    assert result.trace.stop_reason == StopReason.MAX_ITERATIONS
    assert [r.enhancer for r in result.trace.iterations] == [EnhancerId.DN] * 3
    assert enhancer.calls == [NOISY] * 3
    assert np.allclose(result.image.data, image.data * 0.9 ** 3)
    assert len(result.outputs) == 3


def test_mixed_sequence(image):
    enhancer = RecordingEnhancer()
    result = IterativeEnhancer(ScriptedClassifier(HAZY, NOISY, CLEAN), enhancer, max_iterations=5).run(image)

    assert [r.predicted for r in result.trace.iterations] == [HAZY, NOISY, CLEAN]
    assert [r.enhancer for r in result.trace.iterations] == [EnhancerId.DHCE, EnhancerId.DN, None]
    assert result.trace.stop_reason == StopReason.NO_DEGRADATION
    assert np.array_equal(result.outputs[-1].data, result.outputs[-2].data)


def test_full_metrics_recorded_per_iteration(image):
    reference = image
    degraded = ImageF(image.data * 0.5)
    pipeline = IterativeEnhancer(ScriptedClassifier(NOISY, CLEAN), RecordingEnhancer(1.0), metrics_on="full")
    result = pipeline.run(degraded, reference)
    first = result.trace.iterations[0].metrics
    assert {'uiqm', 'uciqe', 'entropy', 'mse', 'psnr', 'ssim'} <= set(first)

    no_ref = pipeline.run(degraded)
    assert 'psnr' not in no_ref.trace.iterations[0].metrics


def test_input_is_fitted_once(rng):
    seen = []

    def classifier(img):
        seen.append(img.shape)
        return one_hot(NOISY)

    pipeline = IterativeEnhancer(classifier, RecordingEnhancer(), max_iterations=2, input_side=16)
    result = pipeline.run(ImageF(rng.uniform(size=(30, 40, 3))))
    assert seen == [(16, 16, 3), (16, 16, 3)]
    assert result.source.shape == (16, 16, 3)


def test_invalid_settings():
    with pytest.raises(ConfigError):
        IterativeEnhancer(ScriptedClassifier(CLEAN), RecordingEnhancer(), max_iterations=0)
    with pytest.raises(ConfigError):
        IterativeEnhancer(ScriptedClassifier(CLEAN), RecordingEnhancer(), metrics_on='some')


def test_trace_stop_reason_must_match():
    record = IterationRecord(iteration=1, predicted=NOISY, confidence=0.9, enhancer=EnhancerId.DN)
    with pytest.raises(ValueError):
        IterationTrace(iterations=[record], stop_reason=StopReason.NO_DEGRADATION)
    with pytest.raises(ValueError):
        IterationTrace(iterations=[], stop_reason=StopReason.MAX_ITERATIONS)


def test_trace_file(image, tmp_path):
    result = IterativeEnhancer(ScriptedClassifier(HAZY, CLEAN), RecordingEnhancer()).run(image, image_id='img')
    path = write_trace(result.trace, tmp_path / 'trace.json')
    data = json.loads(path.read_text(encoding='utf-8'))
    assert data['schema_version'] == 1
    assert data['stop_reason'] == 'no_degradation'
    assert [r['predicted'] for r in data['iterations']] == [3, 0]


# ==================== 비율 표 ====================

def test_proportions_count_stopped_images_as_clean(image):
    runs = [
        IterativeEnhancer(ScriptedClassifier(CLEAN), RecordingEnhancer()).run(image),
        IterativeEnhancer(ScriptedClassifier(NOISY), RecordingEnhancer()).run(image),
        IterativeEnhancer(ScriptedClassifier(HAZY, CLEAN), RecordingEnhancer()).run(image),
        IterativeEnhancer(ScriptedClassifier(HAZY, NOISY), RecordingEnhancer()).run(image),
    ]
    rows = iteration_proportions(runs, 3)

    assert len(rows) == 3
    for row in rows:
        assert sum(row.values()) == pytest.approx(100.0)
        assert list(row) == PROPORTION_COLUMNS
    assert rows[0]['Hazy'] == 50.0 and rows[0]['No Degradation'] == 25.0
    assert rows[1]['Noisy'] == 50.0 and rows[1]['No Degradation'] == 50.0
    assert rows[2]['Noisy'] == 50.0 and rows[2]['No Degradation'] == 50.0


# ==================== 일괄 실행 ====================

def test_run_batch_preserves_order_and_reports(image, tmp_path, rng):
    other = ImageF(rng.uniform(0.1, 0.9, size=image.shape))
    items = [
        BatchItem('first', image, image),
        BatchItem('broken', tmp_path / 'missing.png'),
        BatchItem('second', other, other),
    ]
    pipeline = IterativeEnhancer(ScriptedClassifier(CLEAN), RecordingEnhancer())
    summary = pipeline.run_batch(items, report_dir=tmp_path / 'report', progress=False)

    assert [r.image_id for r in summary.results] == ['first', 'second']
    assert summary.failed == ['broken']
    assert summary.metrics[0].values['psnr'] == 100.0
    assert summary.proportions[0]['No Degradation'] == 100.0

    report = tmp_path / 'report'
    with open(report / 'proportions.csv', newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['iteration'] + PROPORTION_COLUMNS
    assert len(rows) == 1 + 3
    assert len((report / 'traces.jsonl').read_text(encoding='utf-8').splitlines()) == 2
    assert json.loads((report / 'failed.json').read_text(encoding='utf-8')) == {'failed': ['broken']}
    assert (report / 'metrics.csv').is_file() and (report / 'metrics.jsonl').is_file()


class OverflowEnhancer:
    """범위를 벗어난 화소를 만들어 ImageF 검사에서 ValueError"""

    def __call__(self, degradation, img):
        return ImageF(img.data + 2.0)


def test_run_batch_records_value_errors_and_keeps_references(image, tmp_path):
    items = [BatchItem('kept', image, image), BatchItem('no_ref', image, tmp_path / 'missing.png')]
    summary = IterativeEnhancer(ScriptedClassifier(CLEAN), RecordingEnhancer()).run_batch(items, progress=False)
    assert summary.failed == ['no_ref']
    references = summary.references()
    assert list(references) == ['kept']
    assert np.array_equal(references['kept'].data, image.data)

    overflow = IterativeEnhancer(ScriptedClassifier(NOISY), OverflowEnhancer())
    summary = overflow.run_batch([BatchItem('a', image), BatchItem('b', image)], progress=False)
    assert summary.results == []
    assert summary.failed == ['a', 'b']


# ==================== 실패 분석 ====================

def _result(image_id, source, outputs):
    records = [
        IterationRecord(iteration=k, predicted=NOISY, confidence=0.9, enhancer=EnhancerId.DN)
        for k in range(1, len(outputs) + 1)
    ]
    trace = IterationTrace(image_id=image_id, iterations=records, stop_reason=StopReason.MAX_ITERATIONS)
    return PipelineResult(trace=trace, image=outputs[-1], source=source, outputs=outputs)


def _offset(img, delta):
    return ImageF.clamped(img.data + delta)


def test_failure_scan_flags_regressions(gradient_image):
    ref = ImageF.clamped(gradient_image.data * 0.8 + 0.1)
    improving = _result('good', _offset(ref, 0.2), [_offset(ref, 0.1), _offset(ref, 0.05), _offset(ref, 0.02)])
    regressing = _result('bad', _offset(ref, 0.2), [_offset(ref, 0.05), _offset(ref, 0.15), _offset(ref, 0.01)])
    references = {'good': ref, 'bad': ref}

    curve = psnr_curve(improving, ref)
    assert len(curve) == 4
    assert curve == sorted(curve)

    scan = failure_scan([improving, regressing], references)
    assert [case.image_id for case in scan.flagged] == ['bad']
    case = scan.flagged[0]
    assert case.iteration == 2
    assert case.drop > 0.5
    assert scan.flagged_percent == 50.0
    assert sum(scan.histogram_counts) == 2
    assert len(scan.histogram_edges) == 21
    assert scan.as_dict()['flagged'][0]['image_id'] == 'bad'


def test_failure_scan_skips_results_without_reference(gradient_image):
    ref = ImageF.clamped(gradient_image.data * 0.8 + 0.1)
    result = _result('x', _offset(ref, 0.2), [_offset(ref, 0.05), _offset(ref, 0.15)])
    scan = failure_scan([result], {})
    assert scan.flagged == [] and scan.flagged_percent == 0.0


# ==================== 체크포인트 구성 ====================

def _write_suite(tmp_path, side):
    paths = {e: save_checkpoint(Checkpoint(network=Network(build_cb(side))), tmp_path / f"{e.value}.aqfn")
             for e in EnhancerId}
    return EnhancerSuite(checkpoints=paths, input_side=side)


def test_load_pipeline_from_checkpoints(tmp_path, rng):
    classifier_path = save_checkpoint(Checkpoint(network=Network(build_classifier(16))), tmp_path / 'cls.aqfn')
    config = PipelineConfig(classifier_path=classifier_path, suite=_write_suite(tmp_path, 16), max_iterations=2)

    pipeline = load_pipeline(config)
    result = pipeline.run(ImageF(rng.uniform(size=(20, 20, 3))), image_id='real')
    assert result.image.shape == (16, 16, 3)
    assert 1 <= len(result.trace.iterations) <= 2


def test_load_pipeline_rejects_side_mismatch(tmp_path):
    classifier_path = save_checkpoint(Checkpoint(network=Network(build_classifier(16))), tmp_path / 'cls.aqfn')
    config = PipelineConfig(classifier_path=classifier_path, suite=_write_suite(tmp_path, 20))
    with pytest.raises(ConfigError):
        load_pipeline(config)
