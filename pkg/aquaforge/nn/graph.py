"""
네트워크 그래프 정의 (LayerDef / NetworkDef) 및 정의 시점 형태 추론

- 레이어는 위상 순서로 나열 (입력은 앞 레이어 이름 또는 'input')
- 형태는 배치 축을 뺀 표본 1개 기준: (C, H, W) 또는 (F,)
"""

from typing import Dict, List, Literal, Optional, Tuple
import math

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import NetworkDefinitionError

INPUT = 'input'

LayerKind = Literal[
    'Dense', 'Conv2d', 'ConvT2d', 'LeakyReLU', 'Sigmoid', 'Flatten',
    'Unflatten', 'Concat', 'Add', 'WeightedGlobalAvgPool',
]

PARAMETRIC_KINDS = ('Dense', 'Conv2d', 'ConvT2d', 'WeightedGlobalAvgPool')
MULTI_INPUT_KINDS = ('Concat', 'Add')

Shape = Tuple[int, ...]


class LayerDef(BaseModel):
    """레이어 1개 정의 (종류별 파라미터)"""

    model_config = ConfigDict(extra='forbid', frozen=True)

    name: str = Field(..., min_length=1)
    kind: LayerKind
    inputs: List[str] = Field(default_factory=lambda: [INPUT])

    in_features: Optional[int] = Field(None, ge=1)
    out_features: Optional[int] = Field(None, ge=1)
    in_channels: Optional[int] = Field(None, ge=1)
    out_channels: Optional[int] = Field(None, ge=1)
    kernel: Optional[Tuple[int, int]] = None
    stride: int = Field(1, ge=1)
    padding: int = Field(0, ge=0)
    negative_slope: float = 0.01
    shape: Optional[List[int]] = None
    init: Literal['kaiming', 'xavier'] = Field(
        'kaiming', description="가중치 초기화 (LeakyReLU 앞: kaiming, Sigmoid 앞: xavier)"
    )

    @field_validator('kernel', mode='before')
    @classmethod
    def _square_kernel(cls, value):
        if isinstance(value, int):
            return (value, value)
        return value

    @model_validator(mode='after')
    def _check_params(self):
        kind = self.kind
        if self.name == INPUT:
            raise NetworkDefinitionError(f"'{INPUT}'은 예약된 이름입니다")

        if kind in MULTI_INPUT_KINDS:
            if len(self.inputs) < 2:
                raise NetworkDefinitionError(f"{self.name}: {kind}는 입력이 2개 이상이어야 합니다")
        elif len(self.inputs) != 1:
            raise NetworkDefinitionError(f"{self.name}: {kind}는 입력이 1개여야 합니다")

        if kind == 'Dense' and (self.in_features is None or self.out_features is None):
            raise NetworkDefinitionError(f"{self.name}: Dense는 in_features/out_features가 필요합니다")

        if kind in ('Conv2d', 'ConvT2d'):
            if self.in_channels is None or self.out_channels is None or self.kernel is None:
                raise NetworkDefinitionError(f"{self.name}: {kind}는 채널 수와 커널이 필요합니다")
            kh, kw = self.kernel
            if kh < 1 or kw < 1:
                raise NetworkDefinitionError(f"{self.name}: 커널 크기는 1 이상이어야 합니다")
            if kind == 'Conv2d' and (kh % 2 == 0 or kw % 2 == 0):
                raise NetworkDefinitionError(f"{self.name}: Conv2d 커널은 홀수여야 합니다")

        if kind == 'WeightedGlobalAvgPool' and self.in_channels is None:
            raise NetworkDefinitionError(f"{self.name}: WeightedGlobalAvgPool은 in_channels가 필요합니다")

        if kind == 'Unflatten' and (not self.shape or any(d < 1 for d in self.shape)):
            raise NetworkDefinitionError(f"{self.name}: Unflatten은 양의 shape이 필요합니다")

        if kind == 'LeakyReLU' and self.negative_slope < 0:
            raise NetworkDefinitionError(f"{self.name}: negative_slope는 0 이상이어야 합니다")
        return self

    @property
    def has_params(self) -> bool:
        return self.kind in PARAMETRIC_KINDS

    def param_shapes(self) -> Dict[str, Shape]:
        """파라미터 이름 -> 형태 (weight, bias 순)"""
        if self.kind == 'Dense':
            return {'weight': (self.out_features, self.in_features), 'bias': (self.out_features,)}
        if self.kind == 'Conv2d':
            return {
                'weight': (self.out_channels, self.in_channels, *self.kernel),
                'bias': (self.out_channels,),
            }
        if self.kind == 'ConvT2d':
            return {
                'weight': (self.in_channels, self.out_channels, *self.kernel),
                'bias': (self.out_channels,),
            }
        if self.kind == 'WeightedGlobalAvgPool':
            return {'weight': (self.in_channels,)}
        return {}


def conv_output_side(side: int, kernel: int, stride: int, padding: int) -> int:
    return (side + 2 * padding - kernel) // stride + 1


def conv_transpose_output_side(side: int, kernel: int, stride: int, padding: int) -> int:
    return (side - 1) * stride - 2 * padding + kernel


def infer_layer_shape(layer: LayerDef, in_shapes: List[Shape]) -> Shape:
    """입력 형태로부터 출력 형태 추론 (불일치 시 NetworkDefinitionError)"""
    kind = layer.kind
    shape = in_shapes[0]

    def fail(msg: str):
        raise NetworkDefinitionError(f"{layer.name} ({kind}): {msg}, 입력 형태 {in_shapes}")

    if kind == 'Dense':
        if shape != (layer.in_features,):
            fail(f"({layer.in_features},) 입력이 필요합니다")
        return (layer.out_features,)

    if kind in ('Conv2d', 'ConvT2d'):
        if len(shape) != 3 or shape[0] != layer.in_channels:
            fail(f"({layer.in_channels}, H, W) 입력이 필요합니다")
        kh, kw = layer.kernel
        side = conv_output_side if kind == 'Conv2d' else conv_transpose_output_side
        out_h = side(shape[1], kh, layer.stride, layer.padding)
        out_w = side(shape[2], kw, layer.stride, layer.padding)
        if kind == 'Conv2d' and (shape[1] + 2 * layer.padding < kh or shape[2] + 2 * layer.padding < kw):
            fail("커널이 입력보다 큽니다")
        if out_h < 1 or out_w < 1:
            fail("출력 크기가 0 이하입니다")
        return (layer.out_channels, out_h, out_w)

    if kind in ('LeakyReLU', 'Sigmoid'):
        return shape

    if kind == 'Flatten':
        return (math.prod(shape),)

    if kind == 'Unflatten':
        target = tuple(layer.shape)
        if math.prod(shape) != math.prod(target):
            fail(f"원소 수가 {target}과 맞지 않습니다")
        return target

    if kind == 'Concat':
        rest = shape[1:]
        if any(s[1:] != rest or len(s) != len(shape) for s in in_shapes):
            fail("채널 축 외 형태가 같아야 합니다")
        return (sum(s[0] for s in in_shapes), *rest)

    if kind == 'Add':
        if any(s != shape for s in in_shapes):
            fail("모든 입력 형태가 같아야 합니다")
        return shape

    # WeightedGlobalAvgPool
    if len(shape) != 3 or shape[0] != layer.in_channels:
        fail(f"({layer.in_channels}, H, W) 입력이 필요합니다")
    return (shape[0],)


class NetworkDef(BaseModel):
    """
    레이어 DAG 정의

    - 위상 순서 나열 + 유일한 이름 → 비순환 보장
    - 출력은 하나 (output 레이어 외에는 모두 어딘가에서 소비되어야 함)
    """

    model_config = ConfigDict(extra='forbid', frozen=True)

    name: str = 'network'
    input_shape: List[int] = Field(..., min_length=1)
    layers: List[LayerDef] = Field(..., min_length=1)
    output: Optional[str] = None

    @model_validator(mode='after')
    def _check_graph(self):
        self.shapes()
        return self

    @property
    def output_name(self) -> str:
        return self.output or self.layers[-1].name

    def shapes(self) -> Dict[str, Shape]:
        """레이어 이름 -> 출력 형태 (그래프 검증 포함)"""
        if any(d < 1 for d in self.input_shape):
            raise NetworkDefinitionError(f"입력 형태가 잘못되었습니다: {self.input_shape}")

        shapes: Dict[str, Shape] = {INPUT: tuple(self.input_shape)}
        consumed = set()
        for layer in self.layers:
            if layer.name in shapes:
                raise NetworkDefinitionError(f"레이어 이름이 중복되었습니다: {layer.name}")
            missing = [name for name in layer.inputs if name not in shapes]
            if missing:
                raise NetworkDefinitionError(
                    f"{layer.name}: 앞에서 정의되지 않은 입력 {missing} (순환 또는 잘못된 연결)"
                )
            shapes[layer.name] = infer_layer_shape(layer, [shapes[name] for name in layer.inputs])
            consumed.update(layer.inputs)

        if self.output_name not in shapes or self.output_name == INPUT:
            raise NetworkDefinitionError(f"출력 레이어가 없습니다: {self.output_name}")
        dangling = [l.name for l in self.layers if l.name not in consumed and l.name != self.output_name]
        if dangling:
            raise NetworkDefinitionError(f"출력이 하나가 아닙니다 (사용되지 않은 레이어: {dangling})")
        return shapes

    @property
    def output_shape(self) -> Shape:
        return self.shapes()[self.output_name]

    def layer(self, name: str) -> LayerDef:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)

    def is_fully_convolutional(self) -> bool:
        return not any(l.kind in ('Dense', 'Flatten', 'Unflatten', 'WeightedGlobalAvgPool') for l in self.layers)

    def with_input_shape(self, input_shape) -> "NetworkDef":
        """입력 형태만 바꾼 정의 (재검증)"""
        data = self.model_dump()
        data['input_shape'] = list(input_shape)
        return NetworkDef.model_validate(data)


class GraphBuilder:
    """
    NetworkDef 작성 도우미

    사용 예:
        g = GraphBuilder('cb', (3, 32, 32))
        g.conv(3, 64, 3, padding=1)
        g.leaky_relu()
        net = g.build()
    """

    def __init__(self, name: str, input_shape):
        self.name = name
        self.input_shape = list(input_shape)
        self.layers: List[LayerDef] = []
        self.last = INPUT
        self._counts: Dict[str, int] = {}

    def add(self, kind: str, inputs: Optional[List[str]] = None, name: Optional[str] = None, **params) -> str:
        if name is None:
            index = self._counts.get(kind, 0) + 1
            self._counts[kind] = index
            name = f"{kind.lower()}{index}"
        layer = LayerDef(name=name, kind=kind, inputs=inputs or [self.last], **params)
        self.layers.append(layer)
        self.last = name
        return name

    # 자주 쓰는 레이어
    def dense(self, in_features: int, out_features: int, init: str = 'kaiming', **kw) -> str:
        return self.add('Dense', in_features=in_features, out_features=out_features, init=init, **kw)

    def conv(self, in_channels: int, out_channels: int, kernel: int, stride: int = 1, padding: int = 0,
             init: str = 'kaiming', **kw) -> str:
        return self.add('Conv2d', in_channels=in_channels, out_channels=out_channels, kernel=kernel,
                        stride=stride, padding=padding, init=init, **kw)

    def conv_transpose(self, in_channels: int, out_channels: int, kernel: int, stride: int = 1,
                       padding: int = 0, init: str = 'kaiming', **kw) -> str:
        return self.add('ConvT2d', in_channels=in_channels, out_channels=out_channels, kernel=kernel,
                        stride=stride, padding=padding, init=init, **kw)

    def leaky_relu(self, negative_slope: float = 0.01, **kw) -> str:
        return self.add('LeakyReLU', negative_slope=negative_slope, **kw)

    def sigmoid(self, **kw) -> str:
        return self.add('Sigmoid', **kw)

    def flatten(self, **kw) -> str:
        return self.add('Flatten', **kw)

    def unflatten(self, shape, **kw) -> str:
        return self.add('Unflatten', shape=list(shape), **kw)

    def build(self, output: Optional[str] = None) -> NetworkDef:
        return NetworkDef(name=self.name, input_shape=self.input_shape, layers=self.layers, output=output)
