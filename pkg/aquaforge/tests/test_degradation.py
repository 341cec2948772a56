"""
합성 열화 연산 / 파라미터 샘플링 테스트
"""

import numpy as np
import pytest

from aquaforge.degradation.synth import (
    DEFAULT_TIER_RANGES,
    apply,
    apply_chain,
    build_tier_table,
    degrade_blur,
    degrade_contrast,
    degrade_haze,
    degrade_illumination,
    degrade_noise,
    degrade_tint,
    sample_spec,
    validate_spec,
)
from aquaforge.errors import DegradationError
from aquaforge.imaging.core import ImageF
from aquaforge.models import DEGRADED_CLASSES, DegradationClass, DegradationSpec, SeverityTier


def test_illumination_scales(rgb_image):
    out = degrade_illumination(rgb_image, 0.4)
    assert np.allclose(out.data, rgb_image.data * 0.4)
    with pytest.raises(DegradationError):
        degrade_illumination(rgb_image, 0.0)


def test_contrast_keeps_mid_gray_fixed():
    img = ImageF(np.array([[[0.5, 0.25, 0.75]]]))
    alpha = 2.0
    out = degrade_contrast(img, alpha, (1 - alpha) / 2)
    assert out.data[0, 0].tolist() == pytest.approx([0.5, 0.0, 1.0])
    with pytest.raises(DegradationError):
        degrade_contrast(img, 0.9, 0.05)


def test_haze_blends_toward_color(rgb_image):
    color = [0.8, 0.9, 1.0]
    full = degrade_haze(rgb_image, 1.0, color)
    assert np.allclose(full.data, np.broadcast_to(color, rgb_image.shape))
    assert np.allclose(degrade_haze(rgb_image, 0.0, color).data, rgb_image.data)
    with pytest.raises(DegradationError):
        degrade_haze(rgb_image, 0.5, [0.5, 0.5])


def test_blur_preserves_constant_and_smooths(rgb_image):
    flat = ImageF(np.full((12, 12, 3), 0.3))
    assert np.allclose(degrade_blur(flat, 3.0).data, 0.3)
    blurred = degrade_blur(rgb_image, 1.5)
    assert blurred.data.std() < rgb_image.data.std()


def test_noise_is_seeded(rgb_image):
    a = degrade_noise(rgb_image, 0.1, seed=42)
    b = degrade_noise(rgb_image, 0.1, seed=42)
    c = degrade_noise(rgb_image, 0.1, seed=43)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)
    assert a.data.min() >= 0.0 and a.data.max() <= 1.0


@pytest.mark.parametrize('channel', ['R', 'G', 'B'])
def test_tint_changes_only_selected_channel(rgb_image, channel):
    index = 'RGB'.index(channel)
    out = degrade_tint(rgb_image, channel, 0.5)
    expected = rgb_image.data[:, :, index] * 0.5 + 0.5
    assert np.allclose(out.data[:, :, index], expected)
    others = [c for c in range(3) if c != index]
    assert np.array_equal(out.data[:, :, others], rgb_image.data[:, :, others])


@pytest.mark.parametrize('degradation', DEGRADED_CLASSES)
@pytest.mark.parametrize('tier', list(SeverityTier))
def test_sampled_spec_lies_in_tier(degradation, tier):
    spec = sample_spec(degradation, tier, seed=1234)
    validate_spec(spec)
    assert spec == sample_spec(degradation, tier, seed=1234)


def test_sampling_clean_is_rejected():
    with pytest.raises(DegradationError):
        sample_spec(DegradationClass.NO_DEGRADATION, SeverityTier.A, seed=0)


def test_validate_rejects_out_of_tier():
    spec = DegradationSpec(degradation=DegradationClass.LOW_ILLUMINATION, tier=SeverityTier.A, params={'s_b': 0.2})
    with pytest.raises(DegradationError):
        validate_spec(spec)


def test_spec_requires_exact_param_keys():
    with pytest.raises(ValueError):
        DegradationSpec(degradation=DegradationClass.NOISY, tier=SeverityTier.A, params={'sigma_blur': 1.0})


def test_tier_table_override():
    table = build_tier_table({'illumination': {'a': [0.6, 0.65]}})
    assert table[DegradationClass.LOW_ILLUMINATION][SeverityTier.A]['s_b'] == (0.6, 0.65)
    assert DEFAULT_TIER_RANGES[DegradationClass.LOW_ILLUMINATION][SeverityTier.A]['s_b'] == (0.5, 0.7)
    with pytest.raises(DegradationError):
        build_tier_table({'illumination': {'a': [0.7, 0.6]}})
    with pytest.raises(DegradationError):
        build_tier_table({'clean': {'a': [0.1, 0.2]}})


def test_apply_dispatch_and_chain(rgb_image):
    dark = sample_spec(DegradationClass.LOW_ILLUMINATION, SeverityTier.B, seed=5)
    noisy = sample_spec(DegradationClass.NOISY, SeverityTier.A, seed=6)
    assert np.allclose(apply(rgb_image, dark).data, rgb_image.data * dark.params['s_b'])

    chained = apply_chain(rgb_image, [dark, noisy])
    assert np.array_equal(chained.data, apply(apply(rgb_image, dark), noisy).data)

    clean = DegradationSpec(degradation=DegradationClass.NO_DEGRADATION, tier=SeverityTier.A)
    assert apply(rgb_image, clean) is rgb_image
