"""
반복 열화 인식 개선 파이프라인

분류 → NoDegradation이면 종료, 아니면 해당 복원 네트워크 적용 → 반복 (최대 max_iterations회)
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union
import logging

import numpy as np
from tqdm import tqdm

from ..errors import AquaforgeError, ConfigError
from ..imaging.core import ImageF, load_image
from ..metrics.iqa import compute_metrics, psnr
from ..metrics.report import write_json, write_metric_csv, write_metric_jsonl, write_table_csv
from ..models import (
    NUM_CLASSES,
    ClassifierOutput,
    DegradationClass,
    IterationRecord,
    IterationTrace,
    MetricReport,
    PipelineConfig,
    StopReason,
    ENHANCER_FOR_CLASS,
)
from ..networks.classifier import DegradationClassifier
from ..networks.enhancers import load_suite
from ..networks.tensors import fit_side
from ..settings import worker_count

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
ImageSource = Union[PathLike, ImageF]

Classifier = Callable[[ImageF], ClassifierOutput]
Enhancer = Callable[[DegradationClass, ImageF], ImageF]

# 반복별로 기록하는 지표
SNAPSHOT_NO_REFERENCE = ('uiqm', 'uciqe', 'entropy')
SNAPSHOT_FULL_REFERENCE = ('mse', 'psnr', 'ssim')

# 비율 표 열 (클래스 코드 순)
PROPORTION_COLUMNS = [c.display_name for c in DegradationClass]

FAILURE_DROP_DB = 0.5
HISTOGRAM_BINS = 20


@dataclass
class PipelineResult:
    """이미지 1장의 실행 결과"""

    trace: IterationTrace
    image: ImageF
    # 입력 영상 (입력 크기로 맞춘 것)
    source: ImageF
    # 반복별 출력 (NoDegradation으로 멈춘 반복은 입력 그대로)
    outputs: List[ImageF] = field(default_factory=list)
    # 입력 크기로 맞춘 참조 영상 (없으면 None)
    reference: Optional[ImageF] = None

    @property
    def image_id(self) -> str:
        return self.trace.image_id


@dataclass
class BatchItem:
    image_id: str
    source: ImageSource
    reference: Optional[ImageSource] = None


@dataclass
class BatchSummary:
    results: List[PipelineResult]
    # 반복별 {클래스 표시명: 비율(%)}
    proportions: List[Dict[str, float]]
    failed: List[str] = field(default_factory=list)
    metrics: List[MetricReport] = field(default_factory=list)

    def references(self) -> Dict[str, ImageF]:
        """성공한 영상의 참조 영상 (실패 분석 입력)"""
        return {r.image_id: r.reference for r in self.results if r.reference is not None}


@dataclass
class FailureCase:
    image_id: str
    iteration: int
    psnr_before: float
    psnr_after: float

    @property
    def drop(self) -> float:
        return self.psnr_before - self.psnr_after


@dataclass
class FailureScan:
    flagged: List[FailureCase]
    flagged_percent: float
    histogram_counts: List[int]
    histogram_edges: List[float]

    def as_dict(self) -> Dict:
        return {
            'flagged': [asdict(case) for case in self.flagged],
            'flagged_percent': self.flagged_percent,
            'histogram_counts': self.histogram_counts,
            'histogram_edges': self.histogram_edges,
        }


def _as_image(source: ImageSource) -> ImageF:
    return source if isinstance(source, ImageF) else load_image(source)


def _match(reference: Optional[ImageF], img: ImageF) -> Optional[ImageF]:
    """참조 영상을 출력 크기에 맞춤"""
    if reference is None or reference.shape[:2] == img.shape[:2]:
        return reference
    return fit_side(reference, img.height)


def items_from_records(records) -> List[BatchItem]:
    """매니페스트 레코드 → 일괄 실행 항목 (참조 영상 포함)"""
    return [BatchItem(r.id, r.degraded_path, r.reference_path) for r in records]


# ==================== 반복 루프 ====================

class IterativeEnhancer:
    """
    반복 개선기

    Args:
        classifier: 영상 → ClassifierOutput
        enhancer: (열화 유형, 영상) → 복원 영상
        max_iterations: 최대 반복 횟수
        metrics_on: 'full'이면 반복마다 지표 기록
        input_side: 지정하면 입력을 한 번만 이 크기로 맞춤
    """

    def __init__(
        self,
        classifier: Classifier,
        enhancer: Enhancer,
        max_iterations: int = 3,
        metrics_on: str = 'none',
        input_side: Optional[int] = None,
    ):
        if max_iterations < 1:
            raise ConfigError(f"max_iterations는 1 이상이어야 합니다: {max_iterations}")
        if metrics_on not in ('none', 'full'):
            raise ConfigError(f"metrics_on은 'none' 또는 'full'이어야 합니다: {metrics_on}")
        self.classifier = classifier
        self.enhancer = enhancer
        self.max_iterations = max_iterations
        self.metrics_on = metrics_on
        self.input_side = input_side

    def _fit(self, img: ImageF) -> ImageF:
        return fit_side(img, self.input_side) if self.input_side else img

    def _snapshot(self, img: ImageF, reference: Optional[ImageF]) -> Dict[str, float]:
        names = list(SNAPSHOT_NO_REFERENCE)
        if reference is not None:
            names += list(SNAPSHOT_FULL_REFERENCE)
        return compute_metrics(img, reference, names)

    def run(self, img: ImageF, reference: Optional[ImageF] = None, image_id: str = '') -> PipelineResult:
        source = self._fit(img)
        reference = self._fit(reference) if reference is not None else None
        current = source
        records: List[IterationRecord] = []
        outputs: List[ImageF] = []
        stop = StopReason.MAX_ITERATIONS

        for iteration in range(1, self.max_iterations + 1):
            result = self.classifier(current)
            enhancer_id = None
            if result.predicted != DegradationClass.NO_DEGRADATION:
                enhancer_id = ENHANCER_FOR_CLASS[result.predicted]
                current = self.enhancer(result.predicted, current)
            outputs.append(current)

            metrics = self._snapshot(current, reference) if self.metrics_on == 'full' else None
            records.append(IterationRecord(
                iteration=iteration,
                predicted=result.predicted,
                confidence=result.confidence,
                enhancer=enhancer_id,
                metrics=metrics,
            ))
            if enhancer_id is None:
                stop = StopReason.NO_DEGRADATION
                break

        trace = IterationTrace(image_id=image_id, iterations=records, stop_reason=stop)
        logger.debug(f"{image_id}: {' → '.join(r.predicted.slug for r in records)} ({stop.value})")
        return PipelineResult(trace=trace, image=current, source=source, outputs=outputs, reference=reference)

    # ==================== 일괄 실행 ====================

    def _run_item(self, item: BatchItem):
        try:
            img = _as_image(item.source)
            reference = _as_image(item.reference) if item.reference is not None else None
            result = self.run(img, reference, image_id=item.image_id)
            values = self._snapshot(result.image, _match(reference, result.image))
        except (AquaforgeError, OSError, ValueError) as e:
            logger.error(f"파이프라인 실패: {item.image_id} ({e})", exc_info=True)
            return None

        report = MetricReport(
            image_id=item.image_id,
            pair_id=item.image_id if reference is not None else None,
            values=values,
        )
        return result, report

    def run_batch(
        self,
        items: Sequence[BatchItem],
        report_dir: Optional[PathLike] = None,
        progress: bool = True,
    ) -> BatchSummary:
        """
        여러 장 실행 (결과 순서는 입력 순서와 동일)

        report_dir를 주면:
            proportions.csv   iteration, 클래스 표시명... (%)
            metrics.csv / metrics.jsonl   이미지별 최종 지표
            traces.jsonl      이미지별 반복 기록
        """
        with ThreadPoolExecutor(max_workers=worker_count()) as executor:
            outcomes = list(tqdm(
                executor.map(self._run_item, items),
                total=len(items), desc='pipeline', disable=not progress,
            ))

        results, reports, failed = [], [], []
        for item, outcome in zip(items, outcomes):
            if outcome is None:
                failed.append(item.image_id)
                continue
            results.append(outcome[0])
            reports.append(outcome[1])

        summary = BatchSummary(
            results=results,
            proportions=iteration_proportions(results, self.max_iterations),
            failed=failed,
            metrics=reports,
        )
        logger.info(f"파이프라인 완료: {len(results)}장 성공, {len(failed)}장 실패")

        if report_dir is not None:
            write_batch_reports(summary, report_dir)
        return summary


def iteration_proportions(results: Sequence[PipelineResult], max_iterations: int) -> List[Dict[str, float]]:
    """
    반복별 예측 클래스 비율(%)

    이미 멈춘 영상은 이후 반복에서 NoDegradation으로 집계 (행 합계 100%)
    """
    rows = []
    total = len(results)
    for k in range(max_iterations):
        counts = np.zeros(NUM_CLASSES, dtype=np.int64)
        for result in results:
            records = result.trace.iterations
            predicted = records[k].predicted if k < len(records) else DegradationClass.NO_DEGRADATION
            counts[int(predicted)] += 1
        percents = counts * 100.0 / total if total else counts.astype(np.float64)
        rows.append({name: float(p) for name, p in zip(PROPORTION_COLUMNS, percents)})
    return rows


def write_batch_reports(summary: BatchSummary, report_dir: PathLike) -> Path:
    report_dir = Path(report_dir)
    rows = (
        [k] + [row[name] for name in PROPORTION_COLUMNS]
        for k, row in enumerate(summary.proportions, start=1)
    )
    write_table_csv(['iteration'] + PROPORTION_COLUMNS, rows, report_dir / 'proportions.csv')
    write_metric_csv(summary.metrics, report_dir / 'metrics.csv')
    write_metric_jsonl(summary.metrics, report_dir / 'metrics.jsonl')

    with open(report_dir / 'traces.jsonl', 'w', encoding='utf-8') as f:
        for result in summary.results:
            f.write(result.trace.model_dump_json() + '\n')
    if summary.failed:
        write_json({'failed': summary.failed}, report_dir / 'failed.json')
    return report_dir


def write_trace(trace: IterationTrace, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trace.model_dump_json(indent=2), encoding='utf-8')
    return path


# ==================== 실패 분석 ====================

def psnr_curve(result: PipelineResult, reference: ImageF) -> List[float]:
    """[입력 PSNR, 1회 후 PSNR, 2회 후 PSNR, ...]"""
    reference = _match(reference, result.source)
    return [psnr(reference, img) for img in [result.source] + result.outputs]


def failure_scan(
    results: Sequence[PipelineResult],
    references: Mapping[str, ImageF],
    threshold_db: float = FAILURE_DROP_DB,
    bins: int = HISTOGRAM_BINS,
) -> FailureScan:
    """
    반복 k(≥2)의 출력 PSNR이 반복 k-1보다 threshold_db 넘게 떨어진 영상 표시

    참조 영상이 없는 결과는 건너뜀. 히스토그램은 최종 출력 PSNR 분포.
    """
    flagged: List[FailureCase] = []
    finals: List[float] = []
    scanned = 0
    for result in results:
        reference = references.get(result.image_id)
        if reference is None:
            continue
        scanned += 1
        curve = psnr_curve(result, reference)[1:]
        finals.append(curve[-1])
        for k in range(1, len(curve)):
            if curve[k] < curve[k - 1] - threshold_db:
                flagged.append(FailureCase(result.image_id, k + 1, curve[k - 1], curve[k]))
                break

    counts, edges = np.histogram(np.asarray(finals, dtype=np.float64), bins=bins)
    percent = 100.0 * len(flagged) / scanned if scanned else 0.0
    logger.info(f"실패 분석: {scanned}장 중 {len(flagged)}장 ({percent:.2f}%)")
    return FailureScan(
        flagged=flagged,
        flagged_percent=percent,
        histogram_counts=counts.tolist(),
        histogram_edges=edges.tolist(),
    )


# ==================== 체크포인트 기반 구성 ====================

def load_pipeline(config: PipelineConfig) -> IterativeEnhancer:
    """분류기 + 복원 네트워크 묶음 로드 (입력 크기 일치 확인)"""
    classifier = DegradationClassifier.from_file(config.classifier_path)
    bank = load_suite(config.suite)
    if classifier.input_side != bank.input_side:
        raise ConfigError(f"분류기와 복원 네트워크의 입력 크기가 다릅니다: {classifier.input_side} != {bank.input_side}")
    return IterativeEnhancer(
        classifier=classifier,
        enhancer=bank,
        max_iterations=config.max_iterations,
        metrics_on=config.metrics_on,
        input_side=bank.input_side,
    )


def run(config: PipelineConfig, img: ImageF, reference: Optional[ImageF] = None, image_id: str = '') -> PipelineResult:
    return load_pipeline(config).run(img, reference, image_id)


def run_batch(
    config: PipelineConfig,
    items: Sequence[BatchItem],
    report_dir: Optional[PathLike] = None,
    progress: bool = True,
) -> BatchSummary:
    return load_pipeline(config).run_batch(items, report_dir, progress)
