"""
데이터 모델 정의
"""

from enum import Enum, IntEnum
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union
import math

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ==================== 열화 분류 ====================

class DegradationClass(IntEnum):
    """지배적 열화 유형 (라벨 파일 코드 0-8)"""

    NO_DEGRADATION = 0
    LOW_ILLUMINATION = 1
    HIGH_CONTRAST = 2
    HAZY = 3
    BLURRY = 4
    NOISY = 5
    REDDISH = 6
    GREENISH = 7
    BLUISH = 8

    @property
    def slug(self) -> str:
        return CLASS_SLUGS[self]

    @property
    def display_name(self) -> str:
        return CLASS_DISPLAY_NAMES[self]

    @classmethod
    def from_slug(cls, slug: str) -> "DegradationClass":
        """'hazy', 'low_illumination' 등 문자열을 열화 유형으로 변환"""
        key = slug.strip().lower().replace('-', '_')
        for member, name in CLASS_SLUGS.items():
            if key in (name, member.name.lower()):
                return member
        raise ValueError(f"알 수 없는 열화 유형: {slug}")


CLASS_SLUGS = {
    DegradationClass.NO_DEGRADATION: 'clean',
    DegradationClass.LOW_ILLUMINATION: 'illumination',
    DegradationClass.HIGH_CONTRAST: 'contrast',
    DegradationClass.HAZY: 'hazy',
    DegradationClass.BLURRY: 'blurry',
    DegradationClass.NOISY: 'noisy',
    DegradationClass.REDDISH: 'reddish',
    DegradationClass.GREENISH: 'greenish',
    DegradationClass.BLUISH: 'bluish',
}

# 결과 표의 행 이름
CLASS_DISPLAY_NAMES = {
    DegradationClass.NO_DEGRADATION: 'No Degradation',
    DegradationClass.LOW_ILLUMINATION: 'Illumination',
    DegradationClass.HIGH_CONTRAST: 'Contrast',
    DegradationClass.HAZY: 'Hazy',
    DegradationClass.BLURRY: 'Blurry',
    DegradationClass.NOISY: 'Noisy',
    DegradationClass.REDDISH: 'Reddish',
    DegradationClass.GREENISH: 'Greenish',
    DegradationClass.BLUISH: 'Bluish',
}

DEGRADED_CLASSES = [c for c in DegradationClass if c != DegradationClass.NO_DEGRADATION]
NUM_CLASSES = len(DegradationClass)


class SeverityTier(str, Enum):
    """열화 강도 단계 (a < b < c)"""

    A = 'A'
    B = 'B'
    C = 'C'


# 열화 유형별 필수 파라미터
REQUIRED_PARAMS = {
    DegradationClass.NO_DEGRADATION: set(),
    DegradationClass.LOW_ILLUMINATION: {'s_b'},
    DegradationClass.HIGH_CONTRAST: {'alpha', 'beta'},
    DegradationClass.HAZY: {'gamma', 'gamma_c'},
    DegradationClass.BLURRY: {'sigma_blur'},
    DegradationClass.NOISY: {'sigma_noise'},
    DegradationClass.REDDISH: {'factor'},
    DegradationClass.GREENISH: {'factor'},
    DegradationClass.BLUISH: {'factor'},
}

ParamValue = Union[float, List[float]]


class DegradationSpec(BaseModel):
    """합성 열화 1회의 전체 이력 (유형 + 강도 + 파라미터 + 시드)"""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "degradation": 3,
                "tier": "A",
                "params": {"gamma": 0.37, "gamma_c": [0.82, 0.91, 0.77]},
                "seed": 1234567890,
            }
        },
    )

    degradation: DegradationClass
    tier: SeverityTier
    params: Dict[str, ParamValue] = Field(default_factory=dict)
    seed: int = Field(0, ge=0, lt=2 ** 64, description="64비트 부호 없는 시드")

    @model_validator(mode='after')
    def _check_param_keys(self):
        required = REQUIRED_PARAMS[self.degradation]
        if set(self.params) != required:
            raise ValueError(
                f"{self.degradation.slug} 파라미터 키 불일치: {sorted(self.params)} != {sorted(required)}"
            )
        return self


class ManifestRecord(BaseModel):
    """매니페스트 1행 (열화 영상 1장)"""

    id: str
    reference_path: str
    degraded_path: str
    class_code: int = Field(..., ge=0, le=8)
    tier: SeverityTier
    params: Dict[str, ParamValue] = Field(default_factory=dict)
    seed: int = Field(0, ge=0, lt=2 ** 64)

    @property
    def degradation(self) -> DegradationClass:
        return DegradationClass(self.class_code)

    @property
    def reference_id(self) -> str:
        return self.id.split('__', 1)[0]


class DatasetManifest(BaseModel):
    """JSON-lines 매니페스트 (id 기준 정렬)"""

    records: List[ManifestRecord] = Field(default_factory=list)

    @model_validator(mode='after')
    def _check_unique_ids(self):
        ids = [r.id for r in self.records]
        if len(ids) != len(set(ids)):
            raise ValueError("매니페스트 id가 중복되었습니다")
        return self

    def degraded_count(self) -> int:
        """NoDegradation 행을 제외한 열화 영상 수"""
        return sum(1 for r in self.records if r.class_code != DegradationClass.NO_DEGRADATION)

    def tier_counts(self, degradation: DegradationClass) -> Dict[str, int]:
        counts = {t.value: 0 for t in SeverityTier}
        for r in self.records:
            if r.class_code == degradation:
                counts[r.tier.value] += 1
        return counts


# ==================== 지표 ====================

class MetricReport(BaseModel):
    """영상 1장(또는 쌍 1개)의 지표 값"""

    image_id: str
    pair_id: Optional[str] = None
    values: Dict[str, float] = Field(default_factory=dict)

    @field_validator('values')
    @classmethod
    def _finite(cls, values: Dict[str, float]) -> Dict[str, float]:
        for name, value in values.items():
            if not math.isfinite(value):
                raise ValueError(f"지표 값이 유한하지 않습니다: {name}={value}")
        return values


# ==================== 분류기 ====================

class ClassifierOutput(BaseModel):
    """분류 결과 (Winner-Take-All)"""

    logits: List[float] = Field(..., min_length=NUM_CLASSES, max_length=NUM_CLASSES)
    predicted: DegradationClass
    confidence: float = Field(..., gt=0.0, le=1.0)


class EvalSummary(BaseModel):
    """분류기 평가 요약"""

    accuracy: float
    f1: List[float] = Field(..., min_length=NUM_CLASSES, max_length=NUM_CLASSES)
    macro_f1: float
    confusion: List[List[int]]
    support: List[int]

    def f1_table(self) -> Dict[str, float]:
        return {DegradationClass(i).display_name: v for i, v in enumerate(self.f1)}


# ==================== 복원 네트워크 ====================

class EnhancerId(str, Enum):
    """복원 네트워크 식별자"""

    IC = 'IC'
    CB_R = 'CB_R'
    CB_G = 'CB_G'
    CB_B = 'CB_B'
    DB = 'DB'
    DHCE = 'DHCE'
    DN = 'DN'


# 열화 유형 -> 복원 네트워크 (대비/안개는 DHCE 하나로 통합)
ENHANCER_FOR_CLASS = {
    DegradationClass.LOW_ILLUMINATION: EnhancerId.IC,
    DegradationClass.HIGH_CONTRAST: EnhancerId.DHCE,
    DegradationClass.HAZY: EnhancerId.DHCE,
    DegradationClass.BLURRY: EnhancerId.DB,
    DegradationClass.NOISY: EnhancerId.DN,
    DegradationClass.REDDISH: EnhancerId.CB_R,
    DegradationClass.GREENISH: EnhancerId.CB_G,
    DegradationClass.BLUISH: EnhancerId.CB_B,
}


def classes_served_by(enhancer: EnhancerId) -> List[DegradationClass]:
    return [c for c, e in ENHANCER_FOR_CLASS.items() if e == enhancer]


class EnhancerSuite(BaseModel):
    """복원 네트워크 체크포인트 묶음"""

    model_config = ConfigDict(extra='forbid')

    checkpoints: Dict[EnhancerId, Path] = Field(default_factory=dict)
    input_side: int = Field(32, ge=4)

    def missing(self) -> List[EnhancerId]:
        return [e for e in EnhancerId if e not in self.checkpoints or not Path(self.checkpoints[e]).is_file()]

    def is_complete(self) -> bool:
        return not self.missing()


# ==================== 학습 ====================

class TrainConfig(BaseModel):
    """학습 설정 (Adam)"""

    model_config = ConfigDict(extra='forbid')

    epochs: int = Field(20, ge=1)
    batch_size: int = Field(16, ge=1)
    lr: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    seed: int = Field(0, ge=0)
    loss: Literal['mse', 'cross_entropy'] = 'mse'


# ==================== 반복 파이프라인 ====================

class StopReason(str, Enum):
    NO_DEGRADATION = 'no_degradation'
    MAX_ITERATIONS = 'max_iterations'


class IterationRecord(BaseModel):
    """반복 1회의 기록"""

    iteration: int = Field(..., ge=1)
    predicted: DegradationClass
    confidence: float
    enhancer: Optional[EnhancerId] = None
    metrics: Optional[Dict[str, float]] = None


class IterationTrace(BaseModel):
    """이미지 1장의 반복 개선 기록"""

    schema_version: int = 1
    image_id: str = ''
    iterations: List[IterationRecord] = Field(default_factory=list)
    stop_reason: StopReason

    @model_validator(mode='after')
    def _consistent_stop(self):
        if not self.iterations:
            raise ValueError("반복 기록이 비어 있습니다")
        last = self.iterations[-1]
        stopped_clean = last.predicted == DegradationClass.NO_DEGRADATION
        if stopped_clean != (self.stop_reason == StopReason.NO_DEGRADATION):
            raise ValueError("종료 사유가 마지막 반복 기록과 맞지 않습니다")
        return self


class PipelineConfig(BaseModel):
    """반복 개선 파이프라인 설정"""

    model_config = ConfigDict(extra='forbid')

    max_iterations: int = Field(3, ge=1)
    classifier_path: Path
    suite: EnhancerSuite
    metrics_on: Literal['none', 'full'] = 'none'


# ==================== 전체 실행 ====================

class RunConfig(BaseModel):
    """end-to-end 재현 실행 설정"""

    model_config = ConfigDict(
        extra='forbid',
        json_schema_extra={
            "example": {
                "references_dir": "data/reference",
                "out_dir": "runs/desk",
                "seed": 7,
                "input_side": 32,
                "classifier_epochs": 20,
                "enhancer_epochs": {"DN": 30, "IC": 30},
            }
        },
    )

    references_dir: Path
    out_dir: Path
    seed: int = Field(0, ge=0)
    input_side: int = Field(32, ge=16)
    classifier_epochs: int = Field(20, ge=1)
    enhancer_epochs: Dict[EnhancerId, int] = Field(default_factory=dict)
    default_enhancer_epochs: int = Field(30, ge=1)
    batch_size: int = Field(16, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    tier_ranges: Dict[str, Dict[str, List[float]]] = Field(
        default_factory=dict,
        description="열화 강도 범위 재정의: {class_slug: {tier: [low, high]}}",
    )
    metrics: List[str] = Field(default_factory=lambda: ['psnr', 'ssim', 'uiqm', 'uciqe'])
    pipeline_test_images: int = Field(100, ge=1)
    max_iterations: int = Field(3, ge=1)

    def epochs_for(self, enhancer: EnhancerId) -> int:
        return self.enhancer_epochs.get(enhancer, self.default_enhancer_epochs)
