"""
파라미터 수 / 연산량(MAC) 계산

GFLOPs는 MACs/1e9 로 보고 (곱셈-누산 1회 = FLOP 1회)
"""

from typing import Dict, Optional, Sequence
import math

from .graph import NetworkDef


def count_params(definition: NetworkDef) -> int:
    """Σ(가중치 + 편향)"""
    return sum(
        math.prod(shape)
        for layer in definition.layers
        for shape in layer.param_shapes().values()
    )


def layer_macs(definition: NetworkDef) -> Dict[str, int]:
    """
    레이어별 MAC

    - Dense: in·out
    - Conv2d: H_out·W_out·C_out·kh·kw·C_in
    - ConvT2d: H_in·W_in·C_in·C_out·kh·kw (입력 화소별 scatter)
    - WeightedGlobalAvgPool: C·H·W
    """
    shapes = definition.shapes()
    macs = {}
    for layer in definition.layers:
        in_shape = shapes[layer.inputs[0]]
        out_shape = shapes[layer.name]
        if layer.kind == 'Dense':
            macs[layer.name] = layer.in_features * layer.out_features
        elif layer.kind == 'Conv2d':
            kh, kw = layer.kernel
            macs[layer.name] = out_shape[1] * out_shape[2] * layer.out_channels * kh * kw * layer.in_channels
        elif layer.kind == 'ConvT2d':
            kh, kw = layer.kernel
            macs[layer.name] = in_shape[1] * in_shape[2] * layer.in_channels * layer.out_channels * kh * kw
        elif layer.kind == 'WeightedGlobalAvgPool':
            macs[layer.name] = math.prod(in_shape)
    return macs


def count_macs(definition: NetworkDef, input_shape: Optional[Sequence[int]] = None) -> int:
    if input_shape is not None and list(input_shape) != list(definition.input_shape):
        definition = definition.with_input_shape(input_shape)
    return sum(layer_macs(definition).values())


def gflops(definition: NetworkDef, input_shape: Optional[Sequence[int]] = None) -> float:
    return count_macs(definition, input_shape) / 1e9
