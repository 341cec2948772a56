"""
영상 품질 지표 (IQA)

Full-reference: MSE, PSNR, RMSE, SSIM, CEF, CNR, IEM, AMBE, AG, PCQI
No-reference:   Entropy, EME, EMEE, UICM, UISM, UIConM, UIQM, UCIQE, SSEQ 특징(공간/스펙트럼 엔트로피)

- 상수가 0-255 범위를 가정하는 지표는 8비트 단위로 계산
- MSE/PSNR/SSIM/Entropy는 0-255 정수 격자로 양자화한 값 사용
- 블록 지표(EME, EMEE, UISM, UIConM, IEM, SSEQ)는 8×8 블록
"""

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Optional, Union
import logging
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dctn

from ..errors import ImageTooSmallError, MetricError, ShapeMismatchError
from ..imaging.core import (
    ImageF,
    block_partition,
    gaussian_kernel,
    gray_plane,
    quantize,
    rgb_to_lab,
    scale255,
    sobel_edges,
)

logger = logging.getLogger(__name__)

Plane = Union[ImageF, np.ndarray]

# ==================== 상수 ====================

PSNR_CAP = 100.0
MAX_VALUE = 255.0

BLOCK = 8
EME_EPS = 1.0           # EME/EMEE 로그 비율의 분자/분모 보정 (8비트 단위)
EMEE_ALPHA = 0.2

SSIM_WINDOW = 8
SSIM_C1 = (0.01 * MAX_VALUE) ** 2
SSIM_C2 = (0.03 * MAX_VALUE) ** 2

UICM_TRIM = 0.1
UICM_MEAN_WEIGHT = -0.2868
UICM_VAR_WEIGHT = 0.1586
UISM_WEIGHTS = (0.299, 0.587, 0.114)
PLIP_GAMMA = 1026.0
UIQM_COEFFS = (0.0282, 0.2953, 3.5753)

UCIQE_COEFFS = (0.4680, 0.2745, 0.2576)
UCIQE_SAT_EPS = 1e-6
SPECTRAL_FLOOR = 1e-10   # 부동소수 잔여 에너지 제거

CEF_WEIGHT = 0.3
CNR_SIGMA_GUARD = 1e-6
RATIO_EPS = 1e-6

PCQI_WINDOW = 11
PCQI_SIGMA = 1.5
PCQI_C = 3.0
PCQI_L = 256.0


# ==================== 공통 ====================

def _check_pair(ref: ImageF, test: ImageF) -> None:
    if ref.shape != test.shape:
        raise ShapeMismatchError(f"영상 크기가 다릅니다: {ref.shape} != {test.shape}")


def _plane255(img: Plane) -> np.ndarray:
    """그레이 평면을 0-255 연속 스케일로"""
    plane = gray_plane(img) if isinstance(img, ImageF) else np.asarray(img, dtype=np.float64)
    return scale255(plane)


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise MetricError(f"지표 값이 유한하지 않습니다: {name}={value}")
    return value


def _entropy_bits(counts: np.ndarray) -> float:
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


@dataclass(frozen=True)
class BlockStats:
    """8×8 타일링의 블록별 최대/최소/평균"""

    max: np.ndarray
    min: np.ndarray
    mean: np.ndarray

    @property
    def count(self) -> int:
        return int(self.max.size)


def block_stats(plane: np.ndarray, size: int = BLOCK) -> BlockStats:
    blocks = block_partition(plane, size, size)
    return BlockStats(
        max=np.array([b.max() for b in blocks]),
        min=np.array([b.min() for b in blocks]),
        mean=np.array([b.mean() for b in blocks]),
    )


# ==================== Full-reference ====================

def mse(ref: ImageF, test: ImageF) -> float:
    """8비트 양자화 후 전체 화소/채널 평균 제곱 오차"""
    _check_pair(ref, test)
    diff = quantize(ref.data) - quantize(test.data)
    return float(np.mean(diff ** 2))


def psnr(ref: ImageF, test: ImageF) -> float:
    """PSNR (dB), 동일 영상은 100 dB로 상한"""
    error = mse(ref, test)
    if error == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 20.0 * math.log10(MAX_VALUE / math.sqrt(error)))


def rmse(ref: ImageF, test: ImageF) -> float:
    return math.sqrt(mse(ref, test))


def ssim(ref: ImageF, test: ImageF, window: int = SSIM_WINDOW) -> float:
    """
    그레이스케일 SSIM (8×8 슬라이딩 윈도우, stride 1, 모집단 통계)
    """
    _check_pair(ref, test)
    if ref.height < window or ref.width < window:
        raise ImageTooSmallError(f"SSIM 윈도우({window})보다 작은 영상입니다: {ref.shape}")

    x = quantize(gray_plane(ref))
    y = quantize(gray_plane(test))
    wx = sliding_window_view(x, (window, window))
    wy = sliding_window_view(y, (window, window))

    mu_x = wx.mean(axis=(-2, -1))
    mu_y = wy.mean(axis=(-2, -1))
    var_x = (wx ** 2).mean(axis=(-2, -1)) - mu_x ** 2
    var_y = (wy ** 2).mean(axis=(-2, -1)) - mu_y ** 2
    cov = (wx * wy).mean(axis=(-2, -1)) - mu_x * mu_y

    local = ((2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)) / (
        (mu_x ** 2 + mu_y ** 2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    )
    return float(local.mean())


def _colorfulness(img: ImageF) -> float:
    """CM = sqrt(σα²+σβ²) + 0.3·sqrt(μα²+μβ²), α=R-G, β=(R+G)/2-B"""
    rgb = scale255(img.data)
    if img.channels == 1:
        return 0.0
    alpha = rgb[:, :, 0] - rgb[:, :, 1]
    beta = (rgb[:, :, 0] + rgb[:, :, 1]) / 2.0 - rgb[:, :, 2]
    return float(
        math.sqrt(alpha.var() + beta.var()) + CEF_WEIGHT * math.sqrt(alpha.mean() ** 2 + beta.mean() ** 2)
    )


def _neighbor_activity(plane: np.ndarray, size: int = BLOCK) -> float:
    """블록 내부 8-이웃 절대 차이 합"""
    total = 0.0
    for block in block_partition(plane, size, size):
        padded = np.pad(block, 1, mode='edge')
        h, w = block.shape
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                shifted = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
                total += float(np.abs(block - shifted).sum())
    return total


def average_gradient(plane: np.ndarray) -> float:
    """AG = mean(sqrt((∇x²+∇y²)/2)), 전방 차분"""
    if plane.shape[0] < 2 or plane.shape[1] < 2:
        return 0.0
    dx = plane[:-1, 1:] - plane[:-1, :-1]
    dy = plane[1:, :-1] - plane[:-1, :-1]
    return float(np.mean(np.sqrt((dx ** 2 + dy ** 2) / 2.0)))


def pcqi(ref: ImageF, test: ImageF) -> float:
    """
    패치 기반 대비 품질 지수 (11×11 가우시안 가중 패치, σ=1.5)

    q = (4/π)·atan((σxy+C)/(σx²+C)) · (σxy+C)/(σx·σy+C) · exp(-|μx-μy|/L)
    """
    _check_pair(ref, test)
    if ref.height < PCQI_WINDOW or ref.width < PCQI_WINDOW:
        raise ImageTooSmallError(f"PCQI 패치({PCQI_WINDOW})보다 작은 영상입니다: {ref.shape}")

    weights = gaussian_kernel(PCQI_SIGMA, PCQI_WINDOW).weights
    x = _plane255(ref)
    y = _plane255(test)

    def local_mean(values: np.ndarray) -> np.ndarray:
        return np.einsum('ijkl,kl->ij', sliding_window_view(values, weights.shape), weights)

    mu_x, mu_y = local_mean(x), local_mean(y)
    var_x = np.maximum(local_mean(x * x) - mu_x ** 2, 0.0)
    var_y = np.maximum(local_mean(y * y) - mu_y ** 2, 0.0)
    cov = local_mean(x * y) - mu_x * mu_y

    q = (4.0 / math.pi) * np.arctan((cov + PCQI_C) / (var_x + PCQI_C))
    q *= (cov + PCQI_C) / (np.sqrt(var_x) * np.sqrt(var_y) + PCQI_C)
    q *= np.exp(-np.abs(mu_x - mu_y) / PCQI_L)
    return float(q.mean())


def fr_auxiliary(ref: ImageF, test: ImageF) -> Dict[str, float]:
    """
    보조 full-reference 지표

    Returns:
        {cef, cnr, iem, ambe, ag_ref, ag_test, pcqi}
    """
    _check_pair(ref, test)
    gray_ref = _plane255(ref)
    gray_test = _plane255(test)

    cef = (_colorfulness(test) + RATIO_EPS) / (_colorfulness(ref) + RATIO_EPS)

    # 신호 = 개선 영상, 잡음 = 개선 영상 - 참조 영상
    noise = gray_test - gray_ref
    sigma_n = float(noise.std())
    cnr = 0.0 if sigma_n < CNR_SIGMA_GUARD else (float(gray_test.mean()) - float(noise.mean())) / sigma_n

    iem = (_neighbor_activity(gray_test) + RATIO_EPS) / (_neighbor_activity(gray_ref) + RATIO_EPS)
    ambe = abs(float(scale255(ref.data).mean()) - float(scale255(test.data).mean()))

    values = {
        'cef': cef,
        'cnr': cnr,
        'iem': iem,
        'ambe': ambe,
        'ag_ref': average_gradient(gray_ref),
        'ag_test': average_gradient(gray_test),
        'pcqi': pcqi(ref, test),
    }
    return {name: _finite(name, v) for name, v in values.items()}


# ==================== No-reference ====================

def entropy(img: ImageF) -> float:
    """8비트 그레이 히스토그램 엔트로피 (bits, 0-8)"""
    levels = quantize(gray_plane(img)).astype(np.int64)
    return _entropy_bits(np.bincount(levels.ravel(), minlength=256))


def eme(plane: Plane, size: int = BLOCK) -> float:
    """블록 평균 20·log10((max+1)/(min+1))"""
    stats = block_stats(_plane255(plane), size)
    terms = 20.0 * np.log10((stats.max + EME_EPS) / (stats.min + EME_EPS))
    return float(terms.mean())


def emee(plane: Plane, alpha: float = EMEE_ALPHA, size: int = BLOCK) -> float:
    """블록 평균 α·r^α·ln r, r = (max+1)/(min+1)"""
    stats = block_stats(_plane255(plane), size)
    ratio = (stats.max + EME_EPS) / (stats.min + EME_EPS)
    terms = alpha * ratio ** alpha * np.log(ratio)
    return float(terms.mean())


def _trimmed_stats(values: np.ndarray, trim: float = UICM_TRIM):
    """비대칭 α-trimmed 평균과, 그 평균 기준 전체 화소 분산"""
    ordered = np.sort(values.ravel())
    k = ordered.size
    low = int(math.ceil(trim * k))
    high = int(math.ceil(trim * k))
    kept = ordered[low:k - high] if k - low - high > 0 else ordered
    mu = float(kept.mean())
    var = float(np.mean((ordered - mu) ** 2))
    return mu, var


def uicm(img: ImageF) -> float:
    """색 균형 지표 (RG, YB 대립 채널의 trimmed 통계)"""
    if img.channels == 1:
        return 0.0
    rgb = scale255(img.data)
    rg = rgb[:, :, 0] - rgb[:, :, 1]
    yb = (rgb[:, :, 0] + rgb[:, :, 1]) / 2.0 - rgb[:, :, 2]
    mu_rg, var_rg = _trimmed_stats(rg)
    mu_yb, var_yb = _trimmed_stats(yb)
    return UICM_MEAN_WEIGHT * math.sqrt(mu_rg ** 2 + mu_yb ** 2) + UICM_VAR_WEIGHT * math.sqrt(var_rg + var_yb)


def _eme_ln(plane255: np.ndarray, size: int = BLOCK) -> float:
    """UISM용 EME: 2/(k1·k2)·Σ ln((max+1)/(min+1))"""
    stats = block_stats(plane255, size)
    return float(2.0 / stats.count * np.log((stats.max + EME_EPS) / (stats.min + EME_EPS)).sum())


def uism(img: ImageF) -> float:
    """선명도 지표: 채널별 (소벨 경사 × 원 채널)의 EME 가중합"""
    total = 0.0
    weights = UISM_WEIGHTS if img.channels == 3 else (1.0,)
    for c, weight in enumerate(weights):
        channel = img.plane(c)
        edges = sobel_edges(ImageF(channel)).plane(0)
        total += weight * _eme_ln(scale255(edges * channel))
    return float(total)


def _plip_minus(a, b):
    return PLIP_GAMMA * (a - b) / (PLIP_GAMMA - b)


def _plip_plus(a, b):
    return a + b - a * b / PLIP_GAMMA


def uiconm(img: ImageF, size: int = BLOCK) -> float:
    """
    대비 지표: PLIP 연산 기반 블록 대비 w = (max⊖min)/(max⊕min)

    UIConM = -2/(k1·k2)·Σ w·ln w (w=0 또는 max⊕min=0 블록은 0)
    """
    stats = block_stats(_plane255(img), size)
    top = _plip_minus(stats.max, stats.min)
    bottom = _plip_plus(stats.max, stats.min)

    w = np.divide(top, bottom, out=np.zeros_like(top), where=bottom > 0)
    terms = np.zeros_like(w)
    positive = w > 0
    terms[positive] = w[positive] * np.log(w[positive])
    return float(-2.0 / stats.count * terms.sum())


def uiqm_components(img: ImageF) -> Dict[str, float]:
    parts = {'uicm': uicm(img), 'uism': uism(img), 'uiconm': uiconm(img)}
    c1, c2, c3 = UIQM_COEFFS
    parts['uiqm'] = c1 * parts['uicm'] + c2 * parts['uism'] + c3 * parts['uiconm']
    return parts


def uiqm(img: ImageF) -> float:
    return uiqm_components(img)['uiqm']


def uciqe_components(img: ImageF) -> Dict[str, float]:
    """CIELab 채도 표준편차, 밝기 대비(99/1 백분위), 평균 포화도"""
    lab = rgb_to_lab(img)
    chroma = np.sqrt(lab.a ** 2 + lab.b ** 2)
    low, high = np.percentile(lab.L, [1, 99])
    return {
        'sigma_chroma': float(chroma.std()),
        'contrast_l': float((high - low) / 100.0),
        'mean_saturation': float(np.mean(chroma / (lab.L + UCIQE_SAT_EPS))),
    }


def uciqe(img: ImageF) -> float:
    parts = uciqe_components(img)
    c1, c2, c3 = UCIQE_COEFFS
    return c1 * parts['sigma_chroma'] + c2 * parts['contrast_l'] + c3 * parts['mean_saturation']


def sseq_features(img: ImageF, size: int = BLOCK) -> Dict[str, float]:
    """
    SSEQ 특징 (품질 회귀는 계산하지 않음)

    - spatial_entropy: 블록 히스토그램 엔트로피 평균
    - spectral_entropy: 블록 DCT-II 계수(DC 제외) 에너지 분포 엔트로피 평균
    """
    plane = _plane255(img)
    blocks = [b for b in block_partition(plane, size, size) if b.shape == (size, size)]
    if not blocks:
        raise ImageTooSmallError(f"SSEQ 블록({size})보다 작은 영상입니다: {plane.shape}")

    spatial = []
    spectral = []
    for block in blocks:
        levels = np.rint(np.clip(block, 0, 255)).astype(np.int64)
        spatial.append(_entropy_bits(np.bincount(levels.ravel(), minlength=256)))

        energy = dctn(block, type=2, norm='ortho') ** 2
        energy[0, 0] = 0.0
        energy[energy < SPECTRAL_FLOOR] = 0.0
        spectral.append(_entropy_bits(energy.ravel()))

    return {
        'spatial_entropy': float(np.mean(spatial)),
        'spectral_entropy': float(np.mean(spectral)),
    }


# ==================== 지표 묶음 ====================

NO_REFERENCE_METRICS: Dict[str, Callable[[ImageF], float]] = {
    'entropy': entropy,
    'eme': eme,
    'emee': emee,
    'uicm': uicm,
    'uism': uism,
    'uiconm': uiconm,
    'uiqm': uiqm,
    'uciqe': uciqe,
}

FULL_REFERENCE_METRICS: Dict[str, Callable[[ImageF, ImageF], float]] = {
    'mse': mse,
    'psnr': psnr,
    'rmse': rmse,
    'ssim': ssim,
}

SSEQ_METRICS = ('spatial_entropy', 'spectral_entropy')
AUXILIARY_METRICS = ('cef', 'cnr', 'iem', 'ambe', 'ag_ref', 'ag_test', 'pcqi')

ALL_METRICS = (
    list(FULL_REFERENCE_METRICS) + list(AUXILIARY_METRICS)
    + list(NO_REFERENCE_METRICS) + list(SSEQ_METRICS)
)


def no_reference_metrics(img: ImageF) -> Dict[str, float]:
    values = {name: fn(img) for name, fn in NO_REFERENCE_METRICS.items()}
    values.update(sseq_features(img))
    return {name: _finite(name, v) for name, v in values.items()}


def full_reference_metrics(ref: ImageF, test: ImageF) -> Dict[str, float]:
    values = {name: fn(ref, test) for name, fn in FULL_REFERENCE_METRICS.items()}
    values.update(fr_auxiliary(ref, test))
    return {name: _finite(name, v) for name, v in values.items()}


def compute_metrics(
    img: ImageF,
    ref: Optional[ImageF] = None,
    names: Optional[Iterable[str]] = None,
) -> Dict[str, float]:
    """
    지정한 지표 계산

    Args:
        img: 평가 영상
        ref: 참조 영상 (없으면 full-reference 지표는 건너뜀)
        names: 지표 이름 목록 (기본: 계산 가능한 전부)
    """
    wanted = list(names) if names is not None else None
    unknown = [n for n in (wanted or []) if n not in ALL_METRICS]
    if unknown:
        raise MetricError(f"알 수 없는 지표: {', '.join(unknown)}")

    def need(name: str) -> bool:
        return wanted is None or name in wanted

    values: Dict[str, float] = {}
    for name, fn in NO_REFERENCE_METRICS.items():
        if need(name):
            values[name] = fn(img)
    if any(need(n) for n in SSEQ_METRICS):
        sseq = sseq_features(img)
        values.update({n: v for n, v in sseq.items() if need(n)})

    if ref is not None:
        for name, fn in FULL_REFERENCE_METRICS.items():
            if need(name):
                values[name] = fn(ref, img)
        if any(need(n) for n in AUXILIARY_METRICS):
            aux = fr_auxiliary(ref, img)
            values.update({n: v for n, v in aux.items() if need(n)})
    elif wanted is not None:
        skipped = [n for n in wanted if n in FULL_REFERENCE_METRICS or n in AUXILIARY_METRICS]
        if skipped:
            logger.debug(f"참조 영상이 없어 건너뛴 지표: {', '.join(skipped)}")

    return {name: _finite(name, v) for name, v in values.items()}
