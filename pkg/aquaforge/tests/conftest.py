"""
공용 픽스처 (작은 합성 영상, 시드 고정 난수)
"""

from pathlib import Path

import numpy as np
import pytest

from aquaforge.imaging.core import ImageF, save_image


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def rgb_image(rng) -> ImageF:
    """24×24 무작위 RGB 영상"""
    return ImageF(rng.uniform(0.05, 0.95, size=(24, 24, 3)))


@pytest.fixture
def gradient_image() -> ImageF:
    """채널마다 방향이 다른 32×32 그라디언트 영상"""
    ramp = np.linspace(0.0, 1.0, 32)
    r = np.tile(ramp, (32, 1))
    g = r.T
    b = (r + g) / 2.0
    return ImageF(np.stack([r, g, b], axis=-1))


@pytest.fixture
def reference_dir(tmp_path: Path, rng) -> Path:
    """참조 영상 6장이 들어 있는 평평한 폴더"""
    folder = tmp_path / 'refs'
    for i in range(6):
        save_image(ImageF(rng.uniform(0.1, 0.9, size=(20, 28, 3))), folder / f"ref_{i:03d}.png")
    return folder
