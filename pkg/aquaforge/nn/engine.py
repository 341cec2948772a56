"""
NumPy 신경망 엔진 (순전파 / 역전파 / 초기화)

- 텐서는 배치 우선 NCHW (또는 N×F) float64 배열
- 파라미터 값은 float32로 표현 가능한 값으로 유지 (체크포인트 저장 시 비트 단위 동일)
- Conv2d: im2col + 행렬곱 (제로 패딩, 교차상관)
- ConvT2d: 가중치 (Cin, Cout, kh, kw), 입력 화소별 scatter-add 후 패딩만큼 잘라냄
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, Optional, Tuple
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .graph import INPUT, LayerDef, NetworkDef
from ..errors import NetworkDefinitionError, ShapeMismatchError, TrainingDivergedError
from ..rng import make_rng


Params = Dict[str, Dict[str, np.ndarray]]

# LeakyReLU 기울기에 맞춘 Kaiming-uniform 이득
KAIMING_SLOPE = 0.01


def snap_float32(array: np.ndarray) -> np.ndarray:
    """float32로 표현 가능한 값으로 반올림 (float64 유지)"""
    return np.asarray(array, dtype=np.float32).astype(np.float64)


# ==================== 초기화 ====================

def _fans(layer: LayerDef) -> Tuple[int, int]:
    if layer.kind == 'Dense':
        return layer.in_features, layer.out_features
    kh, kw = layer.kernel
    if layer.kind == 'Conv2d':
        return layer.in_channels * kh * kw, layer.out_channels * kh * kw
    # ConvT2d: weight (Cin, Cout, kh, kw)
    return layer.out_channels * kh * kw, layer.in_channels * kh * kw


def init_layer(layer: LayerDef, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    """
    레이어 파라미터 초기화

    - kaiming: U(±sqrt(6/((1+a²)·fan_in))), a = 0.01
    - xavier:  U(±sqrt(6/(fan_in+fan_out)))
    - bias: 0, WeightedGlobalAvgPool 가중치: 1
    """
    shapes = layer.param_shapes()
    if layer.kind == 'WeightedGlobalAvgPool':
        return {'weight': np.ones(shapes['weight'])}

    fan_in, fan_out = _fans(layer)
    if layer.init == 'xavier':
        bound = math.sqrt(6.0 / (fan_in + fan_out))
    else:
        bound = math.sqrt(6.0 / ((1.0 + KAIMING_SLOPE ** 2) * fan_in))
    return {
        'weight': snap_float32(rng.uniform(-bound, bound, size=shapes['weight'])),
        'bias': np.zeros(shapes['bias']),
    }


# ==================== 레이어 연산 ====================

def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def conv2d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, padding: int):
    """Returns (출력, im2col 행렬)"""
    n = x.shape[0]
    cout, cin, kh, kw = weight.shape
    xp = _pad(x, padding)
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    out_h, out_w = windows.shape[2], windows.shape[3]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, cin * kh * kw)
    out = cols @ weight.reshape(cout, -1).T + bias
    return out.reshape(n, out_h, out_w, cout).transpose(0, 3, 1, 2), cols


def conv2d_backward(grad: np.ndarray, x_shape, cols: np.ndarray, weight: np.ndarray, stride: int, padding: int):
    """Returns (dx, dW, db)"""
    n, cin, h, w = x_shape
    cout, _, kh, kw = weight.shape
    out_h, out_w = grad.shape[2], grad.shape[3]
    g2 = grad.transpose(0, 2, 3, 1).reshape(-1, cout)

    d_weight = (g2.T @ cols).reshape(weight.shape)
    d_bias = g2.sum(axis=0)
    d_cols = (g2 @ weight.reshape(cout, -1)).reshape(n, out_h, out_w, cin, kh, kw)

    dxp = np.zeros((n, cin, h + 2 * padding, w + 2 * padding))
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += (
                d_cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            )
    dx = dxp[:, :, padding:padding + h, padding:padding + w]
    return dx, d_weight, d_bias


def conv_transpose2d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, padding: int):
    n, cin, h, w = x.shape
    _, cout, kh, kw = weight.shape
    full_h = (h - 1) * stride + kh
    full_w = (w - 1) * stride + kw

    x_flat = x.transpose(0, 2, 3, 1).reshape(-1, cin)
    cols = (x_flat @ weight.reshape(cin, -1)).reshape(n, h, w, cout, kh, kw)

    full = np.zeros((n, cout, full_h, full_w))
    for i in range(kh):
        for j in range(kw):
            full[:, :, i:i + stride * h:stride, j:j + stride * w:stride] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)

    out = full[:, :, padding:full_h - padding, padding:full_w - padding]
    return out + bias[None, :, None, None]


def conv_transpose2d_backward(grad: np.ndarray, x: np.ndarray, weight: np.ndarray, stride: int, padding: int):
    n, cin, h, w = x.shape
    _, cout, kh, kw = weight.shape
    full_h = (h - 1) * stride + kh
    full_w = (w - 1) * stride + kw

    full = np.zeros((n, cout, full_h, full_w))
    full[:, :, padding:full_h - padding, padding:full_w - padding] = grad

    g_cols = np.empty((n, h, w, cout, kh, kw))
    for i in range(kh):
        for j in range(kw):
            g_cols[:, :, :, :, i, j] = full[:, :, i:i + stride * h:stride, j:j + stride * w:stride].transpose(0, 2, 3, 1)
    g_cols = g_cols.reshape(n * h * w, cout * kh * kw)

    x_flat = x.transpose(0, 2, 3, 1).reshape(-1, cin)
    d_weight = (x_flat.T @ g_cols).reshape(weight.shape)
    d_bias = grad.sum(axis=(0, 2, 3))
    dx = (g_cols @ weight.reshape(cin, -1).T).reshape(n, h, w, cin).transpose(0, 3, 1, 2)
    return dx, d_weight, d_bias


# ==================== 네트워크 ====================

@dataclass
class ForwardCache:
    """역전파용 순전파 기록"""

    activations: Dict[str, np.ndarray] = field(default_factory=dict)
    aux: Dict[str, Any] = field(default_factory=dict)
    definition: Optional[NetworkDef] = None
    input_grad: Optional[np.ndarray] = None


class Network:
    """
    NetworkDef + 파라미터

    Args:
        definition: 그래프 정의
        params: {레이어 이름: {'weight': ..., 'bias': ...}} (없으면 seed로 초기화)
        seed: 초기화 시드
    """

    def __init__(self, definition: NetworkDef, params: Optional[Params] = None, seed: int = 0):
        self.definition = definition
        self.params: Params = params if params is not None else self._initialize(seed)
        self._check_params()

    def _initialize(self, seed: int) -> Params:
        rng = make_rng(seed)
        return {layer.name: init_layer(layer, rng) for layer in self.definition.layers if layer.has_params}

    def _check_params(self) -> None:
        for layer in self.definition.layers:
            for key, shape in layer.param_shapes().items():
                array = self.params.get(layer.name, {}).get(key)
                if array is None or tuple(array.shape) != tuple(shape):
                    raise NetworkDefinitionError(
                        f"{layer.name}.{key} 파라미터 형태 불일치: {None if array is None else array.shape} != {shape}"
                    )

    # ---------- 파라미터 ----------

    def parameters(self) -> Iterator[Tuple[str, str, np.ndarray]]:
        """(레이어, 이름, 배열) - 위상 순서, weight → bias"""
        for layer in self.definition.layers:
            for key in layer.param_shapes():
                yield layer.name, key, self.params[layer.name][key]

    def count_params(self) -> int:
        return sum(array.size for _, _, array in self.parameters())

    def snap(self) -> None:
        """모든 파라미터를 float32 표현 값으로 고정"""
        for name, key, array in list(self.parameters()):
            self.params[name][key] = snap_float32(array)

    def copy(self) -> "Network":
        params = {name: {k: v.copy() for k, v in group.items()} for name, group in self.params.items()}
        return Network(self.definition, params)

    # ---------- 순전파 ----------

    def _resolve_definition(self, x: np.ndarray) -> NetworkDef:
        sample_shape = tuple(x.shape[1:])
        if sample_shape == tuple(self.definition.input_shape):
            return self.definition
        if self.definition.is_fully_convolutional() and len(sample_shape) == len(self.definition.input_shape):
            try:
                return self.definition.with_input_shape(sample_shape)
            except ValueError as e:
                raise ShapeMismatchError(f"입력 형태 {sample_shape}를 처리할 수 없습니다: {e}") from e
        raise ShapeMismatchError(
            f"입력 형태가 다릅니다: {sample_shape} != {tuple(self.definition.input_shape)}"
        )

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward_with_cache(x)
        return out

    def forward_with_cache(self, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim < 2:
            raise ShapeMismatchError(f"배치 축이 필요합니다: {x.shape}")
        definition = self._resolve_definition(x)

        cache = ForwardCache(definition=definition)
        acts = cache.activations
        acts[INPUT] = x

        for layer in definition.layers:
            inputs = [acts[name] for name in layer.inputs]
            acts[layer.name] = self._forward_layer(layer, inputs, cache)

        out = acts[definition.output_name]
        if not np.all(np.isfinite(out)):
            raise TrainingDivergedError(f"{definition.name}: 출력에 유한하지 않은 값이 있습니다")
        return out, cache

    def _forward_layer(self, layer: LayerDef, inputs, cache: ForwardCache) -> np.ndarray:
        x = inputs[0]
        kind = layer.kind
        p = self.params.get(layer.name)

        if kind == 'Dense':
            return x @ p['weight'].T + p['bias']
        if kind == 'Conv2d':
            out, cols = conv2d_forward(x, p['weight'], p['bias'], layer.stride, layer.padding)
            cache.aux[layer.name] = cols
            return out
        if kind == 'ConvT2d':
            return conv_transpose2d_forward(x, p['weight'], p['bias'], layer.stride, layer.padding)
        if kind == 'LeakyReLU':
            return np.where(x > 0, x, layer.negative_slope * x)
        if kind == 'Sigmoid':
            return expit(x)
        if kind == 'Flatten':
            return x.reshape(x.shape[0], -1)
        if kind == 'Unflatten':
            return x.reshape(x.shape[0], *layer.shape)
        if kind == 'Concat':
            return np.concatenate(inputs, axis=1)
        if kind == 'Add':
            return np.sum(inputs, axis=0)
        # WeightedGlobalAvgPool: w_c · mean(x_c)
        return x.mean(axis=(2, 3)) * p['weight']

    # ---------- 역전파 ----------

    def backward(self, cache: ForwardCache, grad_out: np.ndarray) -> Params:
        """
        출력 기울기 → 파라미터 기울기

        Returns:
            params와 같은 구조의 기울기 (입력 기울기는 cache.input_grad)
        """
        definition = cache.definition
        acts = cache.activations
        grads: Dict[str, np.ndarray] = {definition.output_name: np.asarray(grad_out, dtype=np.float64)}
        param_grads: Params = {
            name: {k: np.zeros_like(v) for k, v in group.items()} for name, group in self.params.items()
        }

        for layer in reversed(definition.layers):
            g = grads.pop(layer.name, None)
            if g is None:
                continue
            in_grads = self._backward_layer(layer, g, acts, cache, param_grads)
            for name, dx in zip(layer.inputs, in_grads):
                grads[name] = grads[name] + dx if name in grads else dx

        cache.input_grad = grads.get(INPUT)
        return param_grads

    def _backward_layer(self, layer: LayerDef, g: np.ndarray, acts, cache: ForwardCache, param_grads: Params):
        kind = layer.kind
        x = acts[layer.inputs[0]]
        p = self.params.get(layer.name)

        if kind == 'Dense':
            param_grads[layer.name]['weight'] += g.T @ x
            param_grads[layer.name]['bias'] += g.sum(axis=0)
            return [g @ p['weight']]
        if kind == 'Conv2d':
            dx, dw, db = conv2d_backward(g, x.shape, cache.aux[layer.name], p['weight'], layer.stride, layer.padding)
            param_grads[layer.name]['weight'] += dw
            param_grads[layer.name]['bias'] += db
            return [dx]
        if kind == 'ConvT2d':
            dx, dw, db = conv_transpose2d_backward(g, x, p['weight'], layer.stride, layer.padding)
            param_grads[layer.name]['weight'] += dw
            param_grads[layer.name]['bias'] += db
            return [dx]
        if kind == 'LeakyReLU':
            return [g * np.where(x > 0, 1.0, layer.negative_slope)]
        if kind == 'Sigmoid':
            y = acts[layer.name]
            return [g * y * (1.0 - y)]
        if kind in ('Flatten', 'Unflatten'):
            return [g.reshape(x.shape)]
        if kind == 'Concat':
            bounds = np.cumsum([acts[name].shape[1] for name in layer.inputs])[:-1]
            return np.split(g, bounds, axis=1)
        if kind == 'Add':
            return [g for _ in layer.inputs]
        # WeightedGlobalAvgPool
        h, w = x.shape[2], x.shape[3]
        param_grads[layer.name]['weight'] += (g * x.mean(axis=(2, 3))).sum(axis=0)
        dx = (g * p['weight'])[:, :, None, None] / (h * w)
        return [np.broadcast_to(dx, x.shape).copy()]
