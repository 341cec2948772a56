"""
표 재현 및 end-to-end 실행 (수용 기준 검사)

end-to-end 단계:
    1. 데이터셋 구축
    2. 분류기 학습/평가
    3. 복원 네트워크 7개 학습
    4. 표 재현 (파라미터, GFLOPs, MSE, PSNR / 클래스별 F1)
    5. 3중 열화 테스트 영상으로 반복 파이프라인 실행
    6. 수용 기준 판정 → 하나라도 미달이면 GateFailure
"""

from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union
import logging

import numpy as np

from ..degradation.dataset import build_dataset, load_pair, records_for_split
from ..degradation.synth import apply_chain, build_tier_table, sample_spec
from ..errors import AquaforgeError, CheckpointError, ConfigError, GateFailure
from ..imaging.core import ImageF, load_image, save_image
from ..metrics.iqa import ALL_METRICS, compute_metrics, mse, psnr
from ..metrics.report import summarize, write_json, write_metric_csv, write_table_csv
from ..models import (
    DEGRADED_CLASSES,
    ENHANCER_FOR_CLASS,
    DatasetManifest,
    DegradationClass,
    EnhancerId,
    EnhancerSuite,
    EvalSummary,
    MetricReport,
    PipelineConfig,
    RunConfig,
    SeverityTier,
    TrainConfig,
    classes_served_by,
)
from ..networks.classifier import build_classifier, evaluate, train_classifier
from ..networks.enhancers import EnhancerBank, build_enhancer, enhance_batch, train_enhancer
from ..networks.tensors import fit_side
from ..nn.accounting import count_params, gflops
from ..nn.checkpoint import load_checkpoint, save_checkpoint
from ..pipeline.ida import BatchItem, BatchSummary, failure_scan, load_pipeline, psnr_curve
from ..rng import derive_seed, make_rng

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ACCOUNTING_SIDE = 256
TABLE_HEADER = ['degradation', 'params_m', 'gflops', 'mse', 'psnr']
F1_HEADER = ['degradation', 'f1']

CLASSIFIER_FILE = 'classifier.aqfn'

# 256×256 기준 파라미터 수 목표 (허용 오차 1%)
PARAM_TARGETS = {
    EnhancerId.IC: 50.54e6,
    EnhancerId.DN: 50.54e6,
    EnhancerId.DB: 203.43e6,
    EnhancerId.DHCE: 151.07e6,
}
PARAM_TOLERANCE = 0.01
CLASSIFIER_PARAM_RANGE = (0.20e6, 0.25e6)
DN_GFLOPS_TARGET = 0.0505
GFLOPS_TOLERANCE = 0.05

# 데스크 규모 기준
CLASSIFIER_MIN_ACCURACY = 0.80
CLASSIFIER_MIN_MACRO_F1 = 0.75
ENHANCER_MIN_GAIN_DB = {
    EnhancerId.IC: 6.0,
    EnhancerId.DN: 6.0,
    EnhancerId.CB_R: 6.0,
    EnhancerId.CB_G: 6.0,
    EnhancerId.CB_B: 6.0,
    EnhancerId.DB: 2.0,
    EnhancerId.DHCE: 2.0,
}
PROPORTION_TOLERANCE = 0.1

# 3중 열화 테스트 영상 구성
PIPELINE_CHAIN = 3
PIPELINE_TIER = SeverityTier.B


@dataclass
class Gate:
    name: str
    passed: bool
    detail: str


def checkpoint_name(enhancer: EnhancerId) -> str:
    return f"{EnhancerId(enhancer).value}.aqfn"


def suite_from_dir(models_dir: PathLike, input_side: int) -> EnhancerSuite:
    """models_dir/{ID}.aqfn 형태의 체크포인트 묶음"""
    models_dir = Path(models_dir)
    return EnhancerSuite(
        checkpoints={e: models_dir / checkpoint_name(e) for e in EnhancerId},
        input_side=input_side,
    )


@contextmanager
def stage(name: str):
    """단계 시작/실패 로그 (실패는 그대로 전파)"""
    logger.info(f"[{name}] 시작")
    try:
        yield
    except AquaforgeError as e:
        logger.error(f"[{name}] 단계 실패: {e}")
        raise
    logger.info(f"[{name}] 완료")


# ==================== 표 재현 ====================

def accounting_rows(side: int = ACCOUNTING_SIDE) -> Dict[DegradationClass, Dict[str, float]]:
    """열화 유형별 담당 네트워크의 파라미터(M) / GFLOPs"""
    rows = {}
    for degradation in DEGRADED_CLASSES:
        definition = build_enhancer(ENHANCER_FOR_CLASS[degradation], side)
        rows[degradation] = {
            'params_m': count_params(definition) / 1e6,
            'gflops': gflops(definition),
        }
    return rows


def enhancer_scores(bank: EnhancerBank, manifest: DatasetManifest, split: str = 'test') -> Dict[DegradationClass, Dict]:
    """
    유형별 복원 성능 (담당 네트워크로 held-out 영상 복원)

    Returns:
        {유형: {'mse', 'psnr', 'psnr_input', 'psnr_values', 'psnr_input_values'}}
    """
    scores = {}
    for degradation in DEGRADED_CLASSES:
        records = records_for_split(manifest, split, classes=[degradation])
        pairs = [load_pair(r) for r in records]
        degraded = [fit_side(d, bank.input_side) for d, _ in pairs]
        references = [fit_side(r, bank.input_side) for _, r in pairs]

        network = bank.networks[ENHANCER_FOR_CLASS[degradation]]
        enhanced = enhance_batch(network, degraded, bank.input_side)

        psnr_out = [psnr(ref, out) for ref, out in zip(references, enhanced)]
        psnr_in = [psnr(ref, deg) for ref, deg in zip(references, degraded)]
        scores[degradation] = {
            'mse': float(np.mean([mse(ref, out) for ref, out in zip(references, enhanced)])),
            'psnr': float(np.mean(psnr_out)),
            'psnr_input': float(np.mean(psnr_in)),
            'psnr_values': psnr_out,
            'psnr_input_values': psnr_in,
        }
        logger.info(
            f"{degradation.display_name}: PSNR {scores[degradation]['psnr_input']:.2f} → "
            f"{scores[degradation]['psnr']:.2f} dB ({len(records)}장)"
        )
    return scores


def write_tables(
    out_dir: PathLike,
    side: int = ACCOUNTING_SIDE,
    scores: Optional[Dict[DegradationClass, Dict]] = None,
    classifier_summary: Optional[EvalSummary] = None,
) -> Dict[str, Path]:
    """tables.csv (degradation,params_m,gflops,mse,psnr)와 classifier_f1.csv"""
    out_dir = Path(out_dir)
    accounting = accounting_rows(side)
    rows = []
    for degradation, acc in accounting.items():
        score = (scores or {}).get(degradation)
        rows.append([
            degradation.display_name,
            acc['params_m'],
            acc['gflops'],
            score['mse'] if score else '',
            score['psnr'] if score else '',
        ])
    written = {'tables': write_table_csv(TABLE_HEADER, rows, out_dir / 'tables.csv')}

    if classifier_summary is not None:
        f1_rows = [[name, value] for name, value in classifier_summary.f1_table().items()]
        written['classifier_f1'] = write_table_csv(F1_HEADER, f1_rows, out_dir / 'classifier_f1.csv')
    logger.info(f"표 저장: {', '.join(str(p) for p in written.values())}")
    return written


def reproduce_tables(
    out_dir: PathLike,
    accounting_only: bool = False,
    models_dir: Optional[PathLike] = None,
    manifest: Optional[DatasetManifest] = None,
    side: int = ACCOUNTING_SIDE,
) -> Dict[str, Path]:
    """
    표 재현

    accounting_only면 학습 없이 파라미터/GFLOPs만 기록.
    아니면 models_dir의 체크포인트(classifier.aqfn, {ID}.aqfn)와 매니페스트가 필요.
    """
    if accounting_only:
        return write_tables(out_dir, side)
    if models_dir is None or manifest is None:
        raise ConfigError("체크포인트 폴더와 매니페스트가 필요합니다 (또는 --accounting-only)")

    classifier_path = Path(models_dir) / CLASSIFIER_FILE
    if not classifier_path.is_file():
        raise CheckpointError(f"분류기 체크포인트가 없습니다: {classifier_path}")
    classifier = load_checkpoint(classifier_path)
    summary = evaluate(classifier, manifest)

    # 복원 네트워크는 분류기와 같은 입력 크기로 학습됨
    input_side = int(classifier.definition.input_shape[-1])
    bank = EnhancerBank.from_suite(suite_from_dir(models_dir, input_side))
    return write_tables(out_dir, side, enhancer_scores(bank, manifest), summary)


# ==================== 수용 기준 ====================

def _within(value: float, target: float, tolerance: float) -> bool:
    return abs(value - target) <= tolerance * target


def accounting_gates() -> List[Gate]:
    gates = []
    for enhancer, target in PARAM_TARGETS.items():
        params = count_params(build_enhancer(enhancer, ACCOUNTING_SIDE))
        gates.append(Gate(
            f"params_{enhancer.value}",
            _within(params, target, PARAM_TOLERANCE),
            f"{params / 1e6:.3f}M (목표 {target / 1e6:.2f}M ±1%)",
        ))

    params = count_params(build_classifier(ACCOUNTING_SIDE))
    low, high = CLASSIFIER_PARAM_RANGE
    gates.append(Gate('params_classifier', low <= params <= high, f"{params / 1e6:.4f}M (범위 0.20-0.25M)"))

    dn_gflops = gflops(build_enhancer(EnhancerId.DN, ACCOUNTING_SIDE))
    gates.append(Gate(
        'gflops_DN',
        _within(dn_gflops, DN_GFLOPS_TARGET, GFLOPS_TOLERANCE),
        f"{dn_gflops:.5f} (목표 {DN_GFLOPS_TARGET} ±5%)",
    ))
    return gates


def classifier_gates(summary: EvalSummary) -> List[Gate]:
    return [
        Gate('classifier_accuracy', summary.accuracy >= CLASSIFIER_MIN_ACCURACY,
             f"{summary.accuracy:.4f} (기준 {CLASSIFIER_MIN_ACCURACY})"),
        Gate('classifier_macro_f1', summary.macro_f1 >= CLASSIFIER_MIN_MACRO_F1,
             f"{summary.macro_f1:.4f} (기준 {CLASSIFIER_MIN_MACRO_F1})"),
    ]


def enhancer_gates(scores: Dict[DegradationClass, Dict]) -> List[Gate]:
    """담당 유형 전체에서 중앙값 PSNR 향상폭"""
    gates = []
    for enhancer, minimum in ENHANCER_MIN_GAIN_DB.items():
        served = [c for c in classes_served_by(enhancer) if c in scores]
        out = [v for c in served for v in scores[c]['psnr_values']]
        base = [v for c in served for v in scores[c]['psnr_input_values']]
        gain = float(np.median(out) - np.median(base)) if out else float('nan')
        gates.append(Gate(f"gain_{enhancer.value}", bool(gain >= minimum), f"{gain:.2f} dB (기준 {minimum} dB)"))
    return gates


def pipeline_gates(summary: BatchSummary, references) -> List[Gate]:
    curves = [psnr_curve(r, references[r.image_id]) for r in summary.results]
    if not curves:
        return [Gate('pipeline_images', False, "성공한 영상이 없습니다")]

    degraded = float(np.mean([c[0] for c in curves]))
    first = float(np.mean([c[1] for c in curves]))
    final = float(np.mean([c[-1] for c in curves]))
    sums = [sum(row.values()) for row in summary.proportions]
    return [
        Gate('pipeline_iterations_help', final >= first, f"1회 {first:.2f} dB → 최종 {final:.2f} dB"),
        Gate('pipeline_no_harm', final >= degraded, f"입력 {degraded:.2f} dB → 최종 {final:.2f} dB"),
        Gate('proportions_sum', all(abs(s - 100.0) <= PROPORTION_TOLERANCE for s in sums),
             ', '.join(f"{s:.2f}%" for s in sums)),
    ]


# ==================== end-to-end ====================

def _check_run_config(config: RunConfig) -> None:
    unknown = [m for m in config.metrics if m not in ALL_METRICS]
    if unknown:
        raise ConfigError(f"알 수 없는 지표: {', '.join(unknown)}")
    build_tier_table(config.tier_ranges)


def _train_config(config: RunConfig, epochs: int, seed: int) -> TrainConfig:
    return TrainConfig(epochs=epochs, batch_size=config.batch_size, lr=config.learning_rate, seed=seed)


def pipeline_test_set(
    manifest: DatasetManifest,
    out_dir: PathLike,
    master_seed: int,
    limit: int,
    ranges=None,
) -> Dict[str, BatchItem]:
    """
    test 분할 참조 영상에 서로 다른 열화 3개를 연쇄 적용한 입력 생성

    참조 영상이 limit보다 적으면 참조마다 다른 시드의 연쇄를 더 만들어 limit장을 채움

    Returns:
        {영상 id: BatchItem} (첫 연쇄는 참조 id, 이후는 {참조 id}__chain{k})
    """
    out_dir = Path(out_dir)
    references = {}
    for record in sorted(records_for_split(manifest, 'test'), key=lambda r: r.id):
        references.setdefault(record.reference_id, record.reference_path)
    held_out = list(references.items())
    if len(held_out) < limit:
        logger.warning(f"test 분할 참조 영상 {len(held_out)}장 < {limit}장: 참조마다 연쇄를 추가로 생성")

    items = {}
    loaded: Dict[str, ImageF] = {}
    for n in range(limit):
        ref_id, reference_path = held_out[n % len(held_out)]
        variant = n // len(held_out)
        image_id = ref_id if variant == 0 else f"{ref_id}__chain{variant}"

        rng = make_rng(derive_seed(master_seed, 'pipeline', ref_id, variant))
        chosen = rng.choice(len(DEGRADED_CLASSES), size=PIPELINE_CHAIN, replace=False)
        specs = [
            sample_spec(
                DEGRADED_CLASSES[i], PIPELINE_TIER,
                derive_seed(master_seed, 'pipeline', ref_id, variant, DEGRADED_CLASSES[i].slug),
                ranges,
            )
            for i in chosen
        ]
        if ref_id not in loaded:
            loaded[ref_id] = load_image(reference_path)
        path = out_dir / f"{image_id}.png"
        save_image(apply_chain(loaded[ref_id], specs), path)
        items[image_id] = BatchItem(image_id, path, reference_path)
    return items


def run_end_to_end(config: RunConfig) -> Dict:
    """
    전체 데스크 규모 재현 실행

    Returns:
        {'gates': [...], 'passed': bool, 'reports': {...}}

    Raises:
        GateFailure: 수용 기준 미달
    """
    _check_run_config(config)
    out = Path(config.out_dir)
    models_dir = out / 'models'
    reports_dir = out / 'reports'
    ranges = build_tier_table(config.tier_ranges)
    gates: List[Gate] = []

    with stage('accounting'):
        gates += accounting_gates()

    with stage('build-dataset'):
        manifest = build_dataset(
            config.references_dir, out / 'dataset',
            master_seed=config.seed, side=config.input_side, ranges=ranges,
        )

    with stage('train-classifier'):
        checkpoint = train_classifier(
            manifest, _train_config(config, config.classifier_epochs, config.seed), config.input_side,
        )
        save_checkpoint(checkpoint, models_dir / CLASSIFIER_FILE)
        summary = evaluate(checkpoint, manifest)
        write_json(summary.model_dump(), reports_dir / 'eval_classifier.json')
        gates += classifier_gates(summary)

    for enhancer in EnhancerId:
        with stage(f"train-enhancer {enhancer.value}"):
            train_config = _train_config(config, config.epochs_for(enhancer), derive_seed(config.seed, enhancer.value))
            checkpoint = train_enhancer(enhancer, manifest, train_config, config.input_side)
            save_checkpoint(checkpoint, models_dir / checkpoint_name(enhancer))

    suite = suite_from_dir(models_dir, config.input_side)
    with stage('reproduce-tables'):
        scores = enhancer_scores(EnhancerBank.from_suite(suite), manifest)
        write_tables(reports_dir, ACCOUNTING_SIDE, scores, summary)
        gates += enhancer_gates(scores)

    with stage('pipeline'):
        items = pipeline_test_set(manifest, out / 'pipeline' / 'inputs', config.seed,
                                  config.pipeline_test_images, ranges)
        pipeline = load_pipeline(PipelineConfig(
            max_iterations=config.max_iterations,
            classifier_path=models_dir / CLASSIFIER_FILE,
            suite=suite,
        ))
        batch = pipeline.run_batch(list(items.values()), reports_dir / 'pipeline')
        references = batch.references()

        scan = failure_scan(batch.results, references)
        write_json(scan.as_dict(), reports_dir / 'pipeline' / 'failure_scan.json')
        gates += pipeline_gates(batch, references)

    with stage('evaluate'):
        final_reports = [
            MetricReport(
                image_id=r.image_id,
                pair_id=r.image_id,
                values=compute_metrics(r.image, fit_side(references[r.image_id], r.image.height), config.metrics),
            )
            for r in batch.results
        ]
        write_metric_csv(final_reports, reports_dir / 'pipeline' / 'final_metrics.csv', config.metrics)

    passed = all(g.passed for g in gates)
    result = {
        'gates': [asdict(g) for g in gates],
        'passed': passed,
        'final_metrics_mean': summarize(final_reports),
    }
    write_json(result, reports_dir / 'gates.json')

    for gate in gates:
        logger.info(f"{'PASS' if gate.passed else 'FAIL'} {gate.name}: {gate.detail}")
    if not passed:
        failed = ', '.join(g.name for g in gates if not g.passed)
        raise GateFailure(f"수용 기준 미달: {failed}")
    return result
