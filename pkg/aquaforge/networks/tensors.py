"""
ImageF <-> NCHW 텐서 변환 및 매니페스트 배열 적재
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np

from ..imaging.core import ImageF, load_image, resize_image
from ..models import ManifestRecord
from ..settings import worker_count


def fit_side(img: ImageF, side: int) -> ImageF:
    """네트워크 입력 크기로 맞춤 (이미 맞으면 그대로)"""
    if img.height == side and img.width == side:
        return img
    return resize_image(img, side)


def to_batch(images: Sequence[ImageF]) -> np.ndarray:
    """[H×W×C] 목록 -> (N, C, H, W)"""
    return np.stack([img.data.transpose(2, 0, 1) for img in images])


def to_image(tensor: np.ndarray) -> ImageF:
    """(C, H, W) -> ImageF (클램핑)"""
    return ImageF.clamped(np.asarray(tensor).transpose(1, 2, 0))


def load_arrays(records: Sequence[ManifestRecord], side: int, with_reference: bool = False) -> Tuple[np.ndarray, ...]:
    """
    매니페스트 레코드 -> 배열

    Returns:
        with_reference=False: (열화 영상 배치, 라벨)
        with_reference=True:  (열화 영상 배치, 참조 영상 배치)
    """
    def load(record: ManifestRecord):
        degraded = fit_side(load_image(record.degraded_path), side)
        reference = fit_side(load_image(record.reference_path), side) if with_reference else None
        return degraded, reference

    with ThreadPoolExecutor(max_workers=worker_count()) as executor:
        pairs: List = list(executor.map(load, records))

    inputs = to_batch([d for d, _ in pairs])
    if with_reference:
        return inputs, to_batch([r for _, r in pairs])
    return inputs, np.array([r.class_code for r in records], dtype=np.int64)
