"""
복원 네트워크 (IC, CB_R/G/B, DB, DHCE, DN)

열화 유형 → 네트워크:
    저조도 → IC, 고대비/안개 → DHCE, 블러 → DB, 노이즈 → DN, 적/녹/청 색조 → CB_R/CB_G/CB_B

256×256 기준 파라미터 수:
    IC 50,544,896 / DN 50,550,224 / DB 203,428,200 / DHCE 151,073,256 / CB 40,451
"""

from pathlib import Path
from typing import Callable, Dict, Optional, Union
import logging

import numpy as np

from .tensors import fit_side, load_arrays, to_batch, to_image
from ..degradation.dataset import records_for_split
from ..errors import DegradationError, IncompleteSuiteError, NetworkDefinitionError
from ..imaging.core import ImageF, resample
from ..models import (
    ENHANCER_FOR_CLASS,
    DatasetManifest,
    DegradationClass,
    EnhancerId,
    EnhancerSuite,
    TrainConfig,
    classes_served_by,
)
from ..nn.checkpoint import Checkpoint, load_checkpoint
from ..nn.engine import Network
from ..nn.graph import GraphBuilder, NetworkDef
from ..nn.training import train

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

LATENT = 100
EXPANDED = 500
DENSE_WIDTH = 128
DN_WIDTHS = (128, 64, 32, 16)
CB_CHANNELS = 64


# ==================== 구조 정의 ====================

def _dense_head(g: GraphBuilder, in_features: int, side: int) -> None:
    """마지막 Dense(→HW·3) + Sigmoid + Unflatten"""
    g.dense(in_features, side * side * 3, init='xavier', name='reconstruct')
    g.sigmoid()
    g.unflatten((3, side, side))


def build_ic(input_side: int = 32) -> NetworkDef:
    """Flatten → Dense(HW·3→128) → Dense(128→128) → Dense(128→HW·3) + Sigmoid → Unflatten"""
    pixels = input_side * input_side * 3
    g = GraphBuilder('IC', (3, input_side, input_side))
    g.flatten()
    g.dense(pixels, DENSE_WIDTH)
    g.leaky_relu()
    g.dense(DENSE_WIDTH, DENSE_WIDTH)
    g.leaky_relu()
    _dense_head(g, DENSE_WIDTH, input_side)
    return g.build()


def build_cb(input_side: int = 32) -> NetworkDef:
    """Conv3×3 3→64 → Conv3×3 64→64 → ConvT3×3 64→3 + Sigmoid (stride 1, pad 1, 완전 합성곱)"""
    g = GraphBuilder('CB', (3, input_side, input_side))
    g.conv(3, CB_CHANNELS, 3, padding=1)
    g.leaky_relu()
    g.conv(CB_CHANNELS, CB_CHANNELS, 3, padding=1)
    g.leaky_relu()
    g.conv_transpose(CB_CHANNELS, 3, 3, padding=1, init='xavier')
    g.sigmoid()
    return g.build()


def _encoder_decoder(name: str, input_side: int, stages, dense_activation: bool) -> NetworkDef:
    """
    Conv 인코더 → Dense(→100) → Dense(100→500) → Dense(500→HW·3) + Sigmoid → Unflatten

    Args:
        stages: [(in, out, stride), ...] 3×3 pad 1 합성곱 단계
        dense_activation: 앞의 Dense 두 개 뒤에 LeakyReLU를 둘지 여부
    """
    downsample = 1
    for _, _, stride in stages:
        downsample *= stride
    if input_side % downsample:
        raise NetworkDefinitionError(f"{name} 입력 크기는 {downsample}의 배수여야 합니다: {input_side}")

    g = GraphBuilder(name, (3, input_side, input_side))
    for cin, cout, stride in stages:
        g.conv(cin, cout, 3, stride=stride, padding=1)
        g.leaky_relu()
    g.flatten()

    encoded = stages[-1][1] * (input_side // downsample) ** 2
    g.dense(encoded, LATENT)
    if dense_activation:
        g.leaky_relu()
    g.dense(LATENT, EXPANDED)
    if dense_activation:
        g.leaky_relu()
    _dense_head(g, EXPANDED, input_side)
    return g.build()


def build_db(input_side: int = 32) -> NetworkDef:
    return _encoder_decoder('DB', input_side, [(3, 32, 1), (32, 64, 2)], dense_activation=True)


def build_dhce(input_side: int = 32) -> NetworkDef:
    return _encoder_decoder('DHCE', input_side, [(3, 32, 1), (32, 64, 2), (64, 128, 2)], dense_activation=False)


def build_dn(input_side: int = 32) -> NetworkDef:
    """Dense HW·3→128→64→32→16→32→64→128→HW·3 + Sigmoid"""
    pixels = input_side * input_side * 3
    widths = (pixels,) + DN_WIDTHS + DN_WIDTHS[-2::-1]
    g = GraphBuilder('DN', (3, input_side, input_side))
    g.flatten()
    for cin, cout in zip(widths[:-1], widths[1:]):
        g.dense(cin, cout)
        g.leaky_relu()
    _dense_head(g, widths[-1], input_side)
    return g.build()


BUILDERS: Dict[EnhancerId, Callable[[int], NetworkDef]] = {
    EnhancerId.IC: build_ic,
    EnhancerId.CB_R: build_cb,
    EnhancerId.CB_G: build_cb,
    EnhancerId.CB_B: build_cb,
    EnhancerId.DB: build_db,
    EnhancerId.DHCE: build_dhce,
    EnhancerId.DN: build_dn,
}


def build_enhancer(enhancer: EnhancerId, input_side: int = 32) -> NetworkDef:
    return BUILDERS[EnhancerId(enhancer)](input_side)


def enhancer_for(degradation: DegradationClass) -> EnhancerId:
    degradation = DegradationClass(degradation)
    if degradation == DegradationClass.NO_DEGRADATION:
        raise DegradationError("NoDegradation에는 복원 네트워크가 없습니다")
    return ENHANCER_FOR_CLASS[degradation]


# ==================== 학습 ====================

def train_enhancer(
    enhancer: EnhancerId,
    manifest: DatasetManifest,
    config: TrainConfig,
    input_side: int = 32,
    progress: bool = True,
) -> Checkpoint:
    """
    열화 영상 → 참조 영상 MSE 회귀 (train 분할, 담당 유형만)
    """
    enhancer = EnhancerId(enhancer)
    served = classes_served_by(enhancer)
    records = records_for_split(manifest, 'train', classes=served)
    inputs, targets = load_arrays(records, input_side, with_reference=True)
    logger.info(f"[{enhancer.value}] 학습 쌍 {len(records)}개 ({', '.join(c.slug for c in served)})")

    network = Network(build_enhancer(enhancer, input_side), seed=config.seed)
    config = config.model_copy(update={'loss': 'mse'})
    return train(network, inputs, targets, config, kind=enhancer.value,
                 serves=[c.slug for c in served], progress=progress)


# ==================== 추론 ====================

class EnhancerBank:
    """로드된 복원 네트워크 묶음"""

    def __init__(self, networks: Dict[EnhancerId, Network], input_side: int):
        missing = [e.value for e in EnhancerId if e not in networks]
        if missing:
            raise IncompleteSuiteError(f"복원 네트워크가 없습니다: {', '.join(missing)}")
        self.networks = networks
        self.input_side = input_side

    @classmethod
    def from_suite(cls, suite: EnhancerSuite) -> "EnhancerBank":
        missing = suite.missing()
        if missing:
            raise IncompleteSuiteError(f"체크포인트가 없습니다: {', '.join(e.value for e in missing)}")
        networks = {e: load_checkpoint(path).network for e, path in suite.checkpoints.items()}
        logger.info(f"복원 네트워크 {len(networks)}개 로드")
        return cls(networks, suite.input_side)

    def __call__(self, degradation: DegradationClass, img: ImageF) -> ImageF:
        """복원 1회 (출력 크기 = 입력 크기)"""
        network = self.networks[enhancer_for(degradation)]
        side = self.input_side
        batch = to_batch([resample(img, side, side)])
        out = to_image(network.forward(batch)[0])
        return resample(out, img.height, img.width)


def load_suite(suite: EnhancerSuite) -> EnhancerBank:
    return EnhancerBank.from_suite(suite)


def enhance(suite: Union[EnhancerSuite, EnhancerBank], degradation: DegradationClass, img: ImageF) -> ImageF:
    """열화 유형에 맞는 네트워크로 1회 복원"""
    bank = suite if isinstance(suite, EnhancerBank) else EnhancerBank.from_suite(suite)
    return bank(degradation, img)


def enhance_batch(network: Network, images, input_side: int) -> list:
    """단일 네트워크로 여러 장 복원 (평가용)"""
    batch = to_batch([fit_side(img, input_side) for img in images])
    outputs = np.concatenate([network.forward(batch[s:s + 64]) for s in range(0, len(batch), 64)])
    return [to_image(t) for t in outputs]
