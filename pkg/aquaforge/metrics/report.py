"""
지표 리포트 출력 (CSV / JSON lines)
"""

from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union
import csv
import json
import logging

import numpy as np

from ..imaging.core import ImageF, quantize
from ..models import MetricReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_value(value) -> str:
    """실수는 유효숫자 6자리"""
    if isinstance(value, (float, np.floating)):
        return '%.6g' % value
    return str(value)


def metric_names(reports: Sequence[MetricReport]) -> List[str]:
    """등장 순서를 유지한 지표 이름 합집합"""
    names: List[str] = []
    for report in reports:
        for name in report.values:
            if name not in names:
                names.append(name)
    return names


def write_table_csv(header: Sequence[str], rows: Iterable[Sequence], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def write_metric_csv(
    reports: Sequence[MetricReport],
    path: PathLike,
    names: Optional[Sequence[str]] = None,
) -> Path:
    """image_id, pair_id, 지표... 형식 CSV"""
    names = list(names) if names is not None else metric_names(reports)
    rows = (
        [r.image_id, r.pair_id or ''] + [r.values.get(n, '') for n in names]
        for r in reports
    )
    path = write_table_csv(['image_id', 'pair_id'] + names, rows, path)
    logger.info(f"지표 CSV 저장: {path} ({len(reports)}행)")
    return path


def write_metric_jsonl(reports: Sequence[MetricReport], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for report in reports:
            f.write(report.model_dump_json(exclude_none=True) + '\n')
    logger.info(f"지표 JSONL 저장: {path} ({len(reports)}행)")
    return path


def summarize(reports: Sequence[MetricReport]) -> Dict[str, float]:
    """지표별 평균"""
    summary = {}
    for name in metric_names(reports):
        values = [r.values[name] for r in reports if name in r.values]
        summary[name] = float(np.mean(values))
    return summary


def write_json(data, path: PathLike) -> Path:
    """요약 리포트 JSON 저장"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, ensure_ascii=False, indent=2)
    return path


# ==================== 히스토그램 ====================

HISTOGRAM_BINS = 256
CHANNEL_NAMES = {1: ('Y',), 3: ('R', 'G', 'B')}


def channel_histogram(img: ImageF) -> np.ndarray:
    """채널별 256구간 도수 (C×256, 8비트 양자화 값 기준)"""
    levels = quantize(img.data).astype(np.int64)
    return np.stack([
        np.bincount(levels[:, :, c].reshape(-1), minlength=HISTOGRAM_BINS)
        for c in range(img.channels)
    ])


def write_histogram_csv(images: Sequence[ImageF], path: PathLike) -> Path:
    """
    bin, 채널별 도수 CSV (영상 2장이면 나란히: R, G, B, R_2, G_2, B_2)
    """
    header = ['bin']
    columns = []
    for i, img in enumerate(images, start=1):
        suffix = '' if i == 1 else f'_{i}'
        header += [name + suffix for name in CHANNEL_NAMES[img.channels]]
        columns.extend(channel_histogram(img))
    rows = ([b] + [int(col[b]) for col in columns] for b in range(HISTOGRAM_BINS))
    return write_table_csv(header, rows, path)
