"""
재현 가능한 난수 (시드 유도 + Philox 생성기)
"""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """(마스터 시드, 영상 id, 유형, 단계) 등으로부터 64비트 시드 유도"""
    text = ':'.join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode('utf-8'), digest_size=8).digest()
    return int.from_bytes(digest, 'little')


def make_rng(seed: int) -> np.random.Generator:
    """카운터 기반(Philox) 난수 생성기"""
    return np.random.Generator(np.random.Philox(key=int(seed)))
