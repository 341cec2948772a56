"""
영상 컨테이너, 색공간 변환, 필터링 기본 연산, 파일 입출력

내부 화소 값은 [0,1] 실수입니다. 8비트 상수(PSNR MAX=255 등)를 쓰는 지표는
quantize()로 0-255 정수 격자에 올린 뒤 계산합니다.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Union
import logging
import math

import numpy as np
from PIL import Image
from scipy import ndimage

from ..errors import ImageFormatError, ShapeMismatchError

logger = logging.getLogger(__name__)

# ITU-R BT.601 휘도 가중치
GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])

# sRGB -> XYZ (D65)
SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
D65_WHITE = np.array([0.95047, 1.0, 1.08883])

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T

PathLike = Union[str, Path]


# ==================== 영상 타입 ====================

@dataclass(frozen=True)
class ImageF:
    """H×W×C 실수 영상 (C = 1 또는 3, 값 범위 [0,1])"""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ShapeMismatchError(f"영상은 H×W×1 또는 H×W×3 이어야 합니다: {data.shape}")
        if data.size and (not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0):
            raise ValueError("화소 값은 [0,1] 범위여야 합니다 (클램핑은 명시적으로 수행)")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, 'data', data)

    @classmethod
    def clamped(cls, array: np.ndarray) -> "ImageF":
        """명시적 클램핑 후 생성"""
        return cls(np.clip(np.asarray(array, dtype=np.float64), 0.0, 1.0))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def plane(self, c: int) -> np.ndarray:
        return self.data[:, :, c]


# 1채널 ImageF
GrayImage = ImageF


@dataclass(frozen=True)
class LabImage:
    """CIELab 영상 (L∈[0,100], a,b∈[-128,127])"""

    data: np.ndarray

    @property
    def L(self) -> np.ndarray:
        return self.data[:, :, 0]

    @property
    def a(self) -> np.ndarray:
        return self.data[:, :, 1]

    @property
    def b(self) -> np.ndarray:
        return self.data[:, :, 2]


@dataclass(frozen=True)
class GaussianKernel:
    """정규화된 2차원 가우시안 커널"""

    sigma: float
    size: int
    weights: np.ndarray


def gaussian_kernel(sigma: float, size: int = None) -> GaussianKernel:
    """
    가우시안 커널 생성

    Args:
        sigma: 표준편차 (> 0)
        size: 커널 크기 (홀수, 기본값 2·ceil(3σ)+1)
    """
    if sigma <= 0:
        raise ValueError(f"sigma는 양수여야 합니다: {sigma}")
    if size is None:
        size = 2 * int(math.ceil(3 * sigma)) + 1
    if size < 3 or size % 2 == 0:
        raise ValueError(f"커널 크기는 3 이상의 홀수여야 합니다: {size}")

    r = size // 2
    coords = np.arange(-r, r + 1, dtype=np.float64)
    yy, xx = np.meshgrid(coords, coords, indexing='ij')
    weights = np.exp(-(xx ** 2 + yy ** 2) / (2.0 * sigma ** 2))
    weights /= weights.sum()
    return GaussianKernel(sigma=float(sigma), size=size, weights=weights)


# ==================== 8비트 변환 ====================

def quantize(values: np.ndarray) -> np.ndarray:
    """[0,1] -> 0-255 정수 격자 (float64로 반환)"""
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0)


def scale255(values: np.ndarray) -> np.ndarray:
    """[0,1] -> 0-255 연속 스케일"""
    return np.asarray(values, dtype=np.float64) * 255.0


# ==================== 파일 입출력 ====================

def _read_ppm_tokens(raw: bytes, count: int):
    """PPM 헤더 토큰 파싱 (주석 허용). (토큰 목록, 데이터 시작 오프셋) 반환"""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b'#':
            while pos < len(raw) and raw[pos:pos + 1] not in (b'\n', b'\r'):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("PPM 헤더가 잘렸습니다")
        tokens.append(raw[start:pos].decode('ascii'))
    # 헤더 뒤 공백 한 글자
    return tokens, pos + 1


def read_ppm(path: PathLike) -> ImageF:
    """바이너리 PPM(P6, 8비트) 읽기"""
    raw = Path(path).read_bytes()
    tokens, offset = _read_ppm_tokens(raw, 4)
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != 'P6':
        raise ImageFormatError(f"P6 PPM만 지원합니다: {magic}")
    if maxval != 255:
        raise ImageFormatError(f"8비트(maxval=255) PPM만 지원합니다: maxval={maxval}")

    expected = width * height * 3
    payload = raw[offset:offset + expected]
    if len(payload) != expected:
        raise ImageFormatError(f"PPM 데이터 길이 불일치: {len(payload)} != {expected}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return ImageF(pixels.astype(np.float64) / 255.0)


def write_ppm(img: ImageF, path: PathLike) -> None:
    """바이너리 PPM(P6) 쓰기"""
    if img.channels != 3:
        raise ShapeMismatchError("P6 PPM은 3채널 영상만 저장합니다")
    header = f"P6\n{img.width} {img.height}\n255\n".encode('ascii')
    payload = quantize(img.data).astype(np.uint8).tobytes()
    Path(path).write_bytes(header + payload)


def load_image(path: PathLike) -> ImageF:
    """
    영상 파일 읽기 (PNG 또는 P6 PPM, 8비트)

    Returns:
        값이 raw/255인 ImageF
    """
    path = Path(path)
    if not path.is_file():
        raise ImageFormatError(f"파일을 찾을 수 없습니다: {path}")

    with open(path, 'rb') as f:
        head = f.read(2)
    if head == b'P6':
        return read_ppm(path)

    try:
        with Image.open(path) as pil:
            pil.load()
            mode = pil.mode
            if mode in ('I;16', 'I;16B', 'I;16L', 'I', 'F'):
                raise ImageFormatError(f"8비트 영상만 지원합니다: mode={mode}")
            if mode == 'L':
                array = np.asarray(pil, dtype=np.uint8)
            else:
                array = np.asarray(pil.convert('RGB'), dtype=np.uint8)
    except ImageFormatError:
        raise
    except Exception as e:
        raise ImageFormatError(f"영상을 읽을 수 없습니다: {path} ({e})") from e

    return ImageF(array.astype(np.float64) / 255.0)


def save_image(img: ImageF, path: PathLike) -> None:
    """영상 저장 (.ppm은 P6, 그 외는 Pillow 코덱)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == '.ppm':
        write_ppm(img, path)
        return

    pixels = quantize(img.data).astype(np.uint8)
    if img.channels == 1:
        Image.fromarray(pixels[:, :, 0]).save(path)
    else:
        Image.fromarray(pixels).save(path)


def resample(img: ImageF, height: int, width: int) -> ImageF:
    """크롭 없이 height×width로 리샘플링 (Pillow bicubic)"""
    if img.height == height and img.width == width:
        return img
    pixels = quantize(img.data).astype(np.uint8)
    if img.channels == 1:
        pil = Image.fromarray(pixels[:, :, 0])
    else:
        pil = Image.fromarray(pixels)
    resized = pil.resize((width, height), Image.Resampling.BICUBIC)
    return ImageF(np.asarray(resized, dtype=np.float64) / 255.0)


def resize_image(img: ImageF, side: int) -> ImageF:
    """중앙 정사각형 크롭 후 side×side로 리샘플링 (Pillow bicubic)"""
    if img.height == side and img.width == side:
        return img
    edge = min(img.height, img.width)
    top = (img.height - edge) // 2
    left = (img.width - edge) // 2
    cropped = ImageF(img.data[top:top + edge, left:left + edge, :])
    return resample(cropped, side, side)


# ==================== 색공간 변환 ====================

def to_gray(img: ImageF) -> GrayImage:
    """BT.601 가중치 그레이스케일 변환"""
    if img.channels != 3:
        raise ShapeMismatchError("to_gray는 3채널 영상이 필요합니다")
    gray = img.data @ GRAY_WEIGHTS
    return ImageF.clamped(gray)


def gray_plane(img: ImageF) -> np.ndarray:
    """그레이스케일 평면 (1채널이면 그대로)"""
    if img.channels == 1:
        return img.data[:, :, 0]
    return to_gray(img).data[:, :, 0]


def _lab_f(t: np.ndarray) -> np.ndarray:
    delta = 6.0 / 29.0
    return np.where(t > delta ** 3, np.cbrt(t), t / (3 * delta ** 2) + 4.0 / 29.0)


def rgb_to_lab(img: ImageF) -> LabImage:
    """sRGB -> XYZ(D65) -> CIELab"""
    if img.channels != 3:
        raise ShapeMismatchError("rgb_to_lab는 3채널 영상이 필요합니다")
    rgb = img.data
    linear = np.where(rgb > 0.04045, ((rgb + 0.055) / 1.055) ** 2.4, rgb / 12.92)
    xyz = linear @ SRGB_TO_XYZ.T
    f = _lab_f(xyz / D65_WHITE)

    L = np.clip(116.0 * f[:, :, 1] - 16.0, 0.0, 100.0)
    a = 500.0 * (f[:, :, 0] - f[:, :, 1])
    b = 200.0 * (f[:, :, 1] - f[:, :, 2])
    return LabImage(np.stack([L, a, b], axis=-1))


# ==================== 필터링 ====================

def convolve2d(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """
    2차원 공간 컨볼루션 (replicate 경계)

    Args:
        plane: H×W 평면
        kernel: 홀수 크기 2차원 가중치
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValueError(f"커널 크기는 홀수여야 합니다: {kernel.shape}")
    return ndimage.convolve(np.asarray(plane, dtype=np.float64), kernel, mode='nearest')


def sobel_edges(gray: GrayImage) -> GrayImage:
    """소벨 경사 크기 sqrt(Gx²+Gy²), [0,1]로 클램핑"""
    plane = gray_plane(gray) if isinstance(gray, ImageF) else np.asarray(gray, dtype=np.float64)
    return ImageF.clamped(sobel_magnitude(plane))


def sobel_magnitude(plane: np.ndarray) -> np.ndarray:
    """클램핑 전 소벨 경사 크기"""
    gx = convolve2d(plane, SOBEL_X)
    gy = convolve2d(plane, SOBEL_Y)
    return np.sqrt(gx ** 2 + gy ** 2)


def block_partition(plane: np.ndarray, bh: int, bw: int) -> List[np.ndarray]:
    """
    겹치지 않는 블록 분할 (행 우선 순서, 가장자리 잔여 블록 포함)
    """
    if bh < 1 or bw < 1:
        raise ValueError(f"블록 크기는 1 이상이어야 합니다: {bh}×{bw}")
    height, width = plane.shape[:2]
    return [
        plane[y:y + bh, x:x + bw]
        for y in range(0, height, bh)
        for x in range(0, width, bw)
    ]
