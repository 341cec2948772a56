"""
복원 네트워크 ablation 모델 (파라미터/연산량 재현용)

학습 대상이 아닌 구조 정의만 제공 (`params --arch ablation-k`).
최종 모델(4, 6, 9, 10, 12)은 enhancers의 빌더를 그대로 사용.

256×256 기준:
    Model 1   7,043 / 0.4530 GFLOPs
    Model 2   305,667 / 20.0068 GFLOPs
    Model 3   50,528,384 / 0.0503 GFLOPs
    Model 5   3,523
    Model 11  50,549,152
"""

from typing import Callable, Dict

from .enhancers import build_cb, build_db, build_dhce, build_dn, build_ic
from ..errors import NetworkDefinitionError
from ..nn.graph import GraphBuilder, NetworkDef


def _model_1(side: int) -> NetworkDef:
    """Conv3×3 3→128 → Conv3×3 128→3 + Sigmoid"""
    g = GraphBuilder('ablation-1', (3, side, side))
    g.conv(3, 128, 3, padding=1)
    g.leaky_relu()
    g.conv(128, 3, 3, padding=1, init='xavier')
    g.sigmoid()
    return g.build()


def _model_2(side: int) -> NetworkDef:
    """Conv3×3 3→128 → Conv3×3 128→256 → Conv3×3 256→3 + Sigmoid"""
    g = GraphBuilder('ablation-2', (3, side, side))
    g.conv(3, 128, 3, padding=1)
    g.leaky_relu()
    g.conv(128, 256, 3, padding=1)
    g.leaky_relu()
    g.conv(256, 3, 3, padding=1, init='xavier')
    g.sigmoid()
    return g.build()


def _dense_stack(name: str, side: int, widths) -> NetworkDef:
    pixels = side * side * 3
    dims = (pixels,) + tuple(widths) + (pixels,)
    g = GraphBuilder(name, (3, side, side))
    g.flatten()
    for cin, cout in zip(dims[:-2], dims[1:-1]):
        g.dense(cin, cout)
        g.leaky_relu()
    g.dense(dims[-2], dims[-1], init='xavier')
    g.sigmoid()
    g.unflatten((3, side, side))
    return g.build()


def _model_3(side: int) -> NetworkDef:
    """Dense HW·3→128→HW·3 + Sigmoid"""
    return _dense_stack('ablation-3', side, (128,))


def _model_5(side: int) -> NetworkDef:
    """Conv3×3 3→64 → ConvT3×3 64→3 + Sigmoid"""
    g = GraphBuilder('ablation-5', (3, side, side))
    g.conv(3, 64, 3, padding=1)
    g.leaky_relu()
    g.conv_transpose(64, 3, 3, padding=1, init='xavier')
    g.sigmoid()
    return g.build()


def _model_11(side: int) -> NetworkDef:
    """Dense HW·3→128→64→32→64→128→HW·3 + Sigmoid"""
    return _dense_stack('ablation-11', side, (128, 64, 32, 64, 128))


# 7, 8은 표의 레이어 구성과 파라미터 수가 맞지 않아 제외
ABLATION_MODELS: Dict[int, Callable[[int], NetworkDef]] = {
    1: _model_1,
    2: _model_2,
    3: _model_3,
    4: build_ic,
    5: _model_5,
    6: build_cb,
    9: build_db,
    10: build_dhce,
    11: _model_11,
    12: build_dn,
}


def build_ablation(k: int, input_side: int = 256) -> NetworkDef:
    if k not in ABLATION_MODELS:
        known = ', '.join(str(m) for m in ABLATION_MODELS)
        raise NetworkDefinitionError(f"알 수 없는 ablation 모델입니다: {k} (가능: {known})")
    return ABLATION_MODELS[k](input_side)
