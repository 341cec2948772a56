"""
체크포인트 파일 (.aqfn)

형식:
    b"AQFN" | u32 버전 | u32 길이 + NetworkDef JSON | u32 길이 + 메타데이터 JSON
    | 파라미터별 little-endian float32 (위상 순서, weight → bias)
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union
import io
import json
import logging
import math
import os
import struct

import numpy as np

from .engine import Network
from .graph import NetworkDef
from ..errors import CheckpointError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = b'AQFN'
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """학습된 네트워크 + 메타데이터 (epochs, loss_curve_tail, seed, serves, kind)"""

    network: Network
    metadata: Dict[str, Any] = field(default_factory=dict)
    # 에폭별 손실 (파일에는 loss_curve_tail만 저장)
    history: List[float] = field(default_factory=list)

    @property
    def definition(self) -> NetworkDef:
        return self.network.definition


def _write_block(buf, payload: bytes) -> None:
    buf.write(struct.pack('<I', len(payload)))
    buf.write(payload)


def _read_exact(buf, size: int, what: str) -> bytes:
    chunk = buf.read(size)
    if len(chunk) != size:
        raise CheckpointError(f"{what}가 잘렸습니다")
    return chunk


def _read_block(buf, what: str) -> bytes:
    (length,) = struct.unpack('<I', _read_exact(buf, 4, f"{what} 길이"))
    return _read_exact(buf, length, what)


def save_checkpoint(checkpoint: Checkpoint, path: PathLike) -> Path:
    """임시 파일에 쓴 뒤 교체"""
    path = Path(path)
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack('<I', FORMAT_VERSION))
    _write_block(buf, checkpoint.definition.model_dump_json().encode('utf-8'))
    _write_block(buf, json.dumps(checkpoint.metadata, ensure_ascii=False).encode('utf-8'))
    for _, _, array in checkpoint.network.parameters():
        buf.write(np.ascontiguousarray(array, dtype='<f4').tobytes())

    tmp = path.with_name(path.name + '.tmp')
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_bytes(buf.getvalue())
        os.replace(tmp, path)
    except OSError as e:
        raise CheckpointError(f"체크포인트를 저장할 수 없습니다: {path} ({e})") from e

    logger.info(f"체크포인트 저장: {path} (파라미터 {checkpoint.network.count_params():,}개)")
    return path


def load_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"체크포인트가 없습니다: {path}")

    buf = io.BytesIO(path.read_bytes())
    if buf.read(4) != MAGIC:
        raise CheckpointError(f"체크포인트 형식이 아닙니다: {path}")
    (version,) = struct.unpack('<I', _read_exact(buf, 4, '버전'))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"지원하지 않는 체크포인트 버전입니다: {version}")

    try:
        definition = NetworkDef.model_validate_json(_read_block(buf, 'NetworkDef'))
        metadata = json.loads(_read_block(buf, '메타데이터').decode('utf-8'))
    except CheckpointError:
        raise
    except ValueError as e:
        raise CheckpointError(f"체크포인트 헤더가 손상되었습니다: {path} ({e})") from e

    params: Dict[str, Dict[str, np.ndarray]] = {}
    for layer in definition.layers:
        for key, shape in layer.param_shapes().items():
            count = math.prod(shape)
            raw = _read_exact(buf, 4 * count, f"{layer.name}.{key} 가중치")
            params.setdefault(layer.name, {})[key] = (
                np.frombuffer(raw, dtype='<f4').astype(np.float64).reshape(shape)
            )
    if buf.read(1):
        raise CheckpointError(f"체크포인트 끝에 알 수 없는 데이터가 있습니다: {path}")

    return Checkpoint(network=Network(definition, params), metadata=metadata)
