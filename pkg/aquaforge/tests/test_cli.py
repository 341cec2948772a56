"""
명령행 / 재현 도구 테스트
"""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from aquaforge.cli import bench
from aquaforge.cli.app import EXIT_OK, EXIT_USAGE, main
from aquaforge.degradation.dataset import build_dataset, records_for_split
from aquaforge.errors import DatasetError
from aquaforge.imaging.core import ImageF, load_image, save_image
from aquaforge.metrics.iqa import psnr
from aquaforge.models import DegradationClass, EnhancerId, EvalSummary
from aquaforge.networks.classifier import build_classifier
from aquaforge.networks.enhancers import build_cb
from aquaforge.nn.checkpoint import Checkpoint, save_checkpoint
from aquaforge.nn.engine import Network


def _read_csv(path):
    with open(path, newline='', encoding='utf-8') as f:
        return list(csv.reader(f))


def test_params_command(capsys):
    assert main(['params', '--arch', 'cb', '--side', '256']) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['params'] == 40_451

    assert main(['params', '--arch', 'ablation-3']) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['params'] == 50_528_384
    assert report['gflops'] == pytest.approx(0.0503, abs=1e-4)


def test_params_unknown_arch():
    assert main(['params', '--arch', 'resnet']) == EXIT_USAGE
    assert main(['params', '--arch', 'ablation-x']) == EXIT_USAGE


def test_histogram_command(tmp_path, rgb_image, gradient_image):
    save_image(rgb_image, tmp_path / 'a.png')
    save_image(gradient_image, tmp_path / 'b.png')
    out = tmp_path / 'hist.csv'
    assert main(['histogram', '--in', str(tmp_path / 'a.png'), '--compare', str(tmp_path / 'b.png'),
                 '--out', str(out)]) == EXIT_OK

    rows = _read_csv(out)
    assert rows[0] == ['bin', 'R', 'G', 'B', 'R_2', 'G_2', 'B_2']
    assert sum(int(r[1]) for r in rows[1:]) == 24 * 24
    assert sum(int(r[4]) for r in rows[1:]) == 32 * 32


def test_degrade_command(tmp_path, rgb_image):
    save_image(rgb_image, tmp_path / 'in.png')
    args = ['degrade', '--in', str(tmp_path / 'in.png'), '--out', str(tmp_path / 'out.png'),
            '--class', 'illumination', '--class', 'noisy', '--tier', 'C', '--seed', '3',
            '--spec-out', str(tmp_path / 'specs.json')]
    assert main(args) == EXIT_OK

    specs = json.loads((tmp_path / 'specs.json').read_text(encoding='utf-8'))
    assert [s['degradation'] for s in specs] == [1, 5]
    assert all(s['tier'] == 'C' for s in specs)
    assert psnr(load_image(tmp_path / 'in.png'), load_image(tmp_path / 'out.png')) < 20.0


def test_degrade_rejects_bad_tier_count(tmp_path, rgb_image):
    save_image(rgb_image, tmp_path / 'in.png')
    args = ['degrade', '--in', str(tmp_path / 'in.png'), '--out', str(tmp_path / 'out.png'),
            '--class', 'hazy', '--class', 'noisy', '--class', 'blurry', '--tier', 'A', '--tier', 'B']
    assert main(args) == EXIT_USAGE
    assert main(['degrade', '--in', str(tmp_path / 'in.png'), '--out', str(tmp_path / 'o.png'),
                 '--class', 'sandy']) == EXIT_USAGE


def test_bad_configs_exit_with_usage_code(tmp_path):
    assert main(['enhance', '--config', str(tmp_path / 'missing.json')]) == EXIT_USAGE

    broken = tmp_path / 'broken.json'
    broken.write_text('{"classifier_path": ', encoding='utf-8')
    assert main(['enhance', '--config', str(broken)]) == EXIT_USAGE

    extra = tmp_path / 'extra.toml'
    extra.write_text('references_dir = "r"\nout_dir = "o"\nturbo = true\n', encoding='utf-8')
    assert main(['end-to-end', '--config', str(extra)]) == EXIT_USAGE


def test_evaluate_command(tmp_path, rgb_image):
    save_image(rgb_image, tmp_path / 'ref.png')
    save_image(ImageF(rgb_image.data * 0.5), tmp_path / 'test.png')
    out = tmp_path / 'metrics.csv'
    assert main(['evaluate', '--in', str(tmp_path / 'test.png'), '--reference', str(tmp_path / 'ref.png'),
                 '--metrics', 'psnr', 'uiqm', '--out', str(out)]) == EXIT_OK

    rows = _read_csv(out)
    assert rows[0] == ['image_id', 'pair_id', 'psnr', 'uiqm']
    assert rows[1][0] == 'test'
    assert float(rows[1][2]) < 100.0
    assert out.with_suffix('.jsonl').is_file()

    assert main(['evaluate', '--in', str(tmp_path / 'test.png'), '--metrics', 'nope',
                 '--out', str(out)]) == EXIT_USAGE


def test_build_dataset_command(reference_dir, tmp_path, capsys):
    assert main(['build-dataset', '--refs', str(reference_dir), '--out', str(tmp_path / 'ds'),
                 '--side', '16', '--classes', 'noisy', 'hazy', '--no-clean']) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['records'] == 12
    assert report['tiers']['noisy'] == {'A': 2, 'B': 2, 'C': 2}


# ==================== 표 / 수용 기준 ====================

def test_reproduce_tables_accounting_only(tmp_path):
    assert main(['reproduce-tables', '--out', str(tmp_path), '--accounting-only']) == EXIT_OK
    rows = _read_csv(tmp_path / 'tables.csv')
    assert rows[0] == bench.TABLE_HEADER
    assert len(rows) == 1 + 8

    by_name = {r[0]: r for r in rows[1:]}
    assert float(by_name['Noisy'][1]) == pytest.approx(50.550224, abs=1e-3)
    assert float(by_name['Blurry'][1]) == pytest.approx(203.4282, abs=1e-3)
    assert by_name['Hazy'][1] == by_name['Contrast'][1]
    assert by_name['Reddish'][3] == ''


def test_reproduce_tables_requires_models(tmp_path):
    assert main(['reproduce-tables', '--out', str(tmp_path)]) == EXIT_USAGE


def test_accounting_gates_pass():
    gates = bench.accounting_gates()
    assert {g.name for g in gates} >= {'params_IC', 'params_DN', 'params_DB', 'params_DHCE',
                                       'params_classifier', 'gflops_DN'}
    assert all(g.passed for g in gates), [g for g in gates if not g.passed]


def test_classifier_gates():
    good = EvalSummary(accuracy=0.9, f1=[0.8] * 9, macro_f1=0.8, confusion=[[0] * 9] * 9, support=[0] * 9)
    weak = good.model_copy(update={'accuracy': 0.5, 'macro_f1': 0.4})
    assert all(g.passed for g in bench.classifier_gates(good))
    assert not any(g.passed for g in bench.classifier_gates(weak))


def test_enhancer_gates_use_median_gain():
    scores = {
        DegradationClass.NOISY: {'psnr_values': [30.0, 31.0, 29.0], 'psnr_input_values': [20.0, 21.0, 22.0]},
        DegradationClass.BLURRY: {'psnr_values': [25.0], 'psnr_input_values': [24.0]},
    }
    gates = {g.name: g for g in bench.enhancer_gates(scores)}
    assert gates['gain_DN'].passed
    assert not gates['gain_DB'].passed
    assert not gates['gain_IC'].passed


def test_pipeline_test_set(reference_dir, tmp_path):
    manifest = build_dataset(reference_dir, tmp_path / 'ds', side=16)
    try:
        records_for_split(manifest, 'test')
    except DatasetError:
        pytest.skip('test 분할이 비어 있음')

    items = bench.pipeline_test_set(manifest, tmp_path / 'triple', master_seed=1, limit=1)
    assert len(items) == 1
    for item in items.values():
        degraded = load_image(item.source)
        assert degraded.shape == (16, 16, 3)
        assert not np.array_equal(degraded.data, load_image(item.reference).data)


def test_pipeline_test_set_fills_limit(reference_dir, tmp_path, caplog):
    manifest = build_dataset(reference_dir, tmp_path / 'ds', side=16)
    try:
        held_out = sorted({r.reference_id for r in records_for_split(manifest, 'test')})
    except DatasetError:
        pytest.skip('test 분할이 비어 있음')

    limit = len(held_out) * 2 + 1
    with caplog.at_level('WARNING', logger='aquaforge.cli.bench'):
        items = bench.pipeline_test_set(manifest, tmp_path / 'a', master_seed=1, limit=limit)
    assert len(items) == limit
    assert 'test 분할 참조 영상' in caplog.text

    ref_id = held_out[0]
    assert {ref_id, f"{ref_id}__chain1", f"{ref_id}__chain2"} <= set(items)
    first = load_image(items[ref_id].source).data
    second = load_image(items[f"{ref_id}__chain1"].source).data
    assert not np.array_equal(first, second)

    again = bench.pipeline_test_set(manifest, tmp_path / 'b', master_seed=1, limit=limit)
    assert np.array_equal(load_image(again[f"{ref_id}__chain1"].source).data, second)


def test_enhance_manifest_survives_unreadable_reference(reference_dir, tmp_path):
    manifest = build_dataset(reference_dir, tmp_path / 'ds', side=16, classes=[DegradationClass.NOISY])
    records = records_for_split(manifest, 'train')
    missing_ref = records[0].reference_path
    Path(missing_ref).unlink()
    expected_failed = {r.id for r in records if r.reference_path == missing_ref}

    models = tmp_path / 'models'
    config = {
        'classifier_path': str(save_checkpoint(Checkpoint(network=Network(build_classifier(16))), models / 'cls.aqfn')),
        'max_iterations': 2,
        'suite': {
            'input_side': 16,
            'checkpoints': {
                e.value: str(save_checkpoint(Checkpoint(network=Network(build_cb(16))), models / f"{e.value}.aqfn"))
                for e in EnhancerId
            },
        },
    }
    config_path = tmp_path / 'pipeline.json'
    config_path.write_text(json.dumps(config), encoding='utf-8')

    report_dir = tmp_path / 'report'
    assert main(['enhance', '--config', str(config_path), '--manifest', str(tmp_path / 'ds'),
                 '--split', 'train', '--report-dir', str(report_dir)]) == EXIT_OK

    failed = json.loads((report_dir / 'failed.json').read_text(encoding='utf-8'))['failed']
    assert set(failed) == expected_failed
    scan = json.loads((report_dir / 'failure_scan.json').read_text(encoding='utf-8'))
    assert sum(scan['histogram_counts']) == len(records) - len(expected_failed)
