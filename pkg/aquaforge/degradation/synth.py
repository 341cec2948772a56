"""
조건별 합성 열화 (저조도, 고대비, 안개, 블러, 노이즈, 적/녹/청 색조)

열화 강도 단계(A/B/C)별 파라미터 범위:
- 저조도 s_b:      A U(0.5,0.7)   B U(0.3,0.5)   C U(0.1,0.3)
- 고대비 alpha:    A U(1.3,1.7)   B U(1.7,2.2)   C U(2.2,3.0)   (beta = (1-alpha)/2, 중간 회색 고정점)
- 안개 gamma:      A U(0.30,0.45) B U(0.45,0.60) C U(0.60,0.80) (안개 색 gamma_c 채널별 U(0.70,1.0))
- 블러 sigma:      A 1.5          B 3.0          C 5.0
- 노이즈 sigma:    A 0.05         B 0.10         C 0.15
- 색조 factor:     A U(0.25,0.40) B U(0.40,0.55) C U(0.55,0.70)
"""

from typing import Dict, Iterable, Mapping, Tuple, Union
import copy
import logging

import numpy as np

from ..errors import DegradationError
from ..imaging.core import ImageF, convolve2d, gaussian_kernel
from ..models import DegradationClass, DegradationSpec, SeverityTier
from ..rng import derive_seed, make_rng

logger = logging.getLogger(__name__)

Range = Tuple[float, float]

# 열화 유형 -> 강도 단계 -> 파라미터 -> (하한, 상한)
DEFAULT_TIER_RANGES: Dict[DegradationClass, Dict[SeverityTier, Dict[str, Range]]] = {
    DegradationClass.LOW_ILLUMINATION: {
        SeverityTier.A: {'s_b': (0.5, 0.7)},
        SeverityTier.B: {'s_b': (0.3, 0.5)},
        SeverityTier.C: {'s_b': (0.1, 0.3)},
    },
    DegradationClass.HIGH_CONTRAST: {
        SeverityTier.A: {'alpha': (1.3, 1.7)},
        SeverityTier.B: {'alpha': (1.7, 2.2)},
        SeverityTier.C: {'alpha': (2.2, 3.0)},
    },
    DegradationClass.HAZY: {
        SeverityTier.A: {'gamma': (0.30, 0.45), 'gamma_c': (0.70, 1.0)},
        SeverityTier.B: {'gamma': (0.45, 0.60), 'gamma_c': (0.70, 1.0)},
        SeverityTier.C: {'gamma': (0.60, 0.80), 'gamma_c': (0.70, 1.0)},
    },
    DegradationClass.BLURRY: {
        SeverityTier.A: {'sigma_blur': (1.5, 1.5)},
        SeverityTier.B: {'sigma_blur': (3.0, 3.0)},
        SeverityTier.C: {'sigma_blur': (5.0, 5.0)},
    },
    DegradationClass.NOISY: {
        SeverityTier.A: {'sigma_noise': (0.05, 0.05)},
        SeverityTier.B: {'sigma_noise': (0.10, 0.10)},
        SeverityTier.C: {'sigma_noise': (0.15, 0.15)},
    },
}
for _tint in (DegradationClass.REDDISH, DegradationClass.GREENISH, DegradationClass.BLUISH):
    DEFAULT_TIER_RANGES[_tint] = {
        SeverityTier.A: {'factor': (0.25, 0.40)},
        SeverityTier.B: {'factor': (0.40, 0.55)},
        SeverityTier.C: {'factor': (0.55, 0.70)},
    }

# 파라미터 정의역 (재정의 범위 검증용)
PARAM_DOMAINS: Dict[str, Range] = {
    's_b': (1e-6, 1.0),
    'alpha': (1.0, 10.0),
    'gamma': (0.0, 1.0),
    'gamma_c': (0.0, 1.0),
    'sigma_blur': (1e-6, 50.0),
    'sigma_noise': (1e-6, 1.0),
    'factor': (0.0, 1.0),
}

TINT_CHANNELS = {
    DegradationClass.REDDISH: 0,
    DegradationClass.GREENISH: 1,
    DegradationClass.BLUISH: 2,
}
CHANNEL_INDEX = {'R': 0, 'G': 1, 'B': 2}

TierTable = Dict[DegradationClass, Dict[SeverityTier, Dict[str, Range]]]


# ==================== 강도 범위 ====================

def build_tier_table(overrides: Mapping[str, Mapping[str, Iterable[float]]] = None) -> TierTable:
    """
    기본 범위에 재정의를 반영한 범위 표 생성

    Args:
        overrides: {class_slug: {tier: [low, high]}} - 유형의 주 파라미터 범위를 교체
    """
    table = copy.deepcopy(DEFAULT_TIER_RANGES)
    for slug, tiers in (overrides or {}).items():
        degradation = DegradationClass.from_slug(slug)
        if degradation not in table:
            raise DegradationError(f"범위를 재정의할 수 없는 유형입니다: {slug}")
        for tier_name, bounds in tiers.items():
            tier = SeverityTier(tier_name.upper())
            low, high = (float(v) for v in bounds)
            param = next(iter(table[degradation][tier]))
            dom_low, dom_high = PARAM_DOMAINS[param]
            if not (dom_low <= low <= high <= dom_high):
                raise DegradationError(f"{slug}/{tier.value} 범위가 잘못되었습니다: [{low}, {high}]")
            table[degradation][tier][param] = (low, high)
    return table


def sample_spec(
    degradation: DegradationClass,
    tier: SeverityTier,
    seed: int,
    ranges: TierTable = None,
) -> DegradationSpec:
    """
    단계 범위에서 열화 파라미터 샘플링 (같은 입력 -> 같은 결과)
    """
    degradation = DegradationClass(degradation)
    tier = SeverityTier(tier)
    if degradation == DegradationClass.NO_DEGRADATION:
        raise DegradationError("NoDegradation은 샘플링할 파라미터가 없습니다")

    ranges = ranges or DEFAULT_TIER_RANGES
    rng = make_rng(seed)
    params: Dict[str, Union[float, list]] = {}

    # 파라미터 이름순으로 뽑아 순서를 고정
    for name, (low, high) in sorted(ranges[degradation][tier].items()):
        if name == 'gamma_c':
            params[name] = [float(v) for v in rng.uniform(low, high, size=3)]
        elif low == high:
            params[name] = float(low)
        else:
            params[name] = float(rng.uniform(low, high))

    if degradation == DegradationClass.HIGH_CONTRAST:
        params['beta'] = (1.0 - params['alpha']) / 2.0

    return DegradationSpec(degradation=degradation, tier=tier, params=params, seed=seed)


def validate_spec(spec: DegradationSpec, ranges: TierTable = None) -> None:
    """파라미터가 해당 단계 범위 안에 있는지 확인"""
    if spec.degradation == DegradationClass.NO_DEGRADATION:
        return
    ranges = ranges or DEFAULT_TIER_RANGES
    for name, (low, high) in ranges[spec.degradation][spec.tier].items():
        values = spec.params[name]
        values = values if isinstance(values, list) else [values]
        for v in values:
            if not (low <= v <= high):
                raise DegradationError(f"{name}={v}가 {spec.tier.value} 범위 [{low}, {high}] 밖입니다")
    if spec.degradation == DegradationClass.HIGH_CONTRAST:
        expected = (1.0 - spec.params['alpha']) / 2.0
        if abs(spec.params['beta'] - expected) > 1e-12:
            raise DegradationError("beta는 (1-alpha)/2 이어야 합니다")


# ==================== 열화 연산 ====================

def degrade_illumination(img: ImageF, s_b: float) -> ImageF:
    """I_ID = s_b × I"""
    if not (0.0 < s_b <= 1.0):
        raise DegradationError(f"s_b는 (0,1] 범위여야 합니다: {s_b}")
    return ImageF(img.data * s_b)


def degrade_contrast(img: ImageF, alpha: float, beta: float) -> ImageF:
    """I_CD = clamp(α·I + β)"""
    if alpha < 1.0:
        raise DegradationError(f"alpha는 1 이상이어야 합니다: {alpha}")
    return ImageF.clamped(alpha * img.data + beta)


def degrade_haze(img: ImageF, gamma: float, gamma_c) -> ImageF:
    """I_DH = (1-γ)·I + γ·γ_c (공간적으로 일정한 안개 색)"""
    if not (0.0 <= gamma <= 1.0):
        raise DegradationError(f"gamma는 [0,1] 범위여야 합니다: {gamma}")
    color = np.asarray(gamma_c, dtype=np.float64).reshape(-1)
    if color.size != 3 or np.any(color < 0.0) or np.any(color > 1.0):
        raise DegradationError(f"안개 색은 [0,1] 범위의 3채널이어야 합니다: {gamma_c}")
    if img.channels == 1:
        color = color.mean(keepdims=True)
    return ImageF.clamped((1.0 - gamma) * img.data + gamma * color)


def degrade_blur(img: ImageF, sigma: float) -> ImageF:
    """채널별 가우시안 블러 (커널 크기 2·ceil(3σ)+1)"""
    if sigma <= 0:
        raise DegradationError(f"sigma는 양수여야 합니다: {sigma}")
    kernel = gaussian_kernel(sigma).weights
    planes = [convolve2d(img.plane(c), kernel) for c in range(img.channels)]
    return ImageF.clamped(np.stack(planes, axis=-1))


def degrade_noise(img: ImageF, sigma: float, seed: int) -> ImageF:
    """가산 가우시안 노이즈 N(0, σ²), [0,1]로 클램핑"""
    if sigma <= 0:
        raise DegradationError(f"sigma는 양수여야 합니다: {sigma}")
    noise = make_rng(seed).normal(0.0, sigma, size=img.shape)
    return ImageF.clamped(img.data + noise)


def degrade_tint(img: ImageF, channel: Union[str, int], factor: float) -> ImageF:
    """
    선택 채널을 I·(1-factor) + factor로 치우침 (나머지 두 채널은 그대로)
    """
    if not (0.0 <= factor <= 1.0):
        raise DegradationError(f"factor는 [0,1] 범위여야 합니다: {factor}")
    if img.channels != 3:
        raise DegradationError("색조 열화는 3채널 영상이 필요합니다")
    index = CHANNEL_INDEX[channel.upper()] if isinstance(channel, str) else int(channel)

    data = np.array(img.data)
    data[:, :, index] = np.clip(data[:, :, index] * (1.0 - factor) + factor, 0.0, 1.0)
    return ImageF(data)


def apply(img: ImageF, spec: DegradationSpec) -> ImageF:
    """열화 명세에 맞는 연산으로 분기"""
    p = spec.params
    kind = spec.degradation

    if kind == DegradationClass.NO_DEGRADATION:
        return img
    if kind == DegradationClass.LOW_ILLUMINATION:
        return degrade_illumination(img, p['s_b'])
    if kind == DegradationClass.HIGH_CONTRAST:
        return degrade_contrast(img, p['alpha'], p['beta'])
    if kind == DegradationClass.HAZY:
        return degrade_haze(img, p['gamma'], p['gamma_c'])
    if kind == DegradationClass.BLURRY:
        return degrade_blur(img, p['sigma_blur'])
    if kind == DegradationClass.NOISY:
        return degrade_noise(img, p['sigma_noise'], spec.seed)
    return degrade_tint(img, TINT_CHANNELS[kind], p['factor'])


def apply_chain(img: ImageF, specs: Iterable[DegradationSpec]) -> ImageF:
    """열화 명세를 순서대로 적용 (복합 열화)"""
    for spec in specs:
        img = apply(img, spec)
    return img
