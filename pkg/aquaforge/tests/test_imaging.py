"""
영상 기본 연산 테스트
"""

import numpy as np
import pytest

from aquaforge.errors import ImageFormatError, ShapeMismatchError
from aquaforge.imaging.core import (
    ImageF,
    block_partition,
    convolve2d,
    gaussian_kernel,
    gray_plane,
    load_image,
    quantize,
    read_ppm,
    resize_image,
    rgb_to_lab,
    save_image,
    sobel_edges,
    to_gray,
    write_ppm,
)


def test_image_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        ImageF(np.full((4, 4, 3), 1.2))
    with pytest.raises(ShapeMismatchError):
        ImageF(np.zeros((4, 4, 2)))


def test_clamped_and_immutable():
    img = ImageF.clamped(np.array([[[-0.5, 0.5, 1.5]]]))
    assert img.data.tolist() == [[[0.0, 0.5, 1.0]]]
    with pytest.raises(ValueError):
        img.data[0, 0, 0] = 0.3


def test_two_dimensional_array_becomes_single_channel():
    img = ImageF(np.zeros((5, 7)))
    assert img.shape == (5, 7, 1)
    assert (img.height, img.width, img.channels) == (5, 7, 1)


def test_png_round_trip_is_exact_on_8bit_grid(tmp_path, rng):
    raw = rng.integers(0, 256, size=(9, 11, 3))
    img = ImageF(raw / 255.0)
    save_image(img, tmp_path / 'x.png')
    loaded = load_image(tmp_path / 'x.png')
    assert np.array_equal(quantize(loaded.data), raw)


def test_ppm_round_trip_and_comment_header(tmp_path, rng):
    raw = rng.integers(0, 256, size=(3, 4, 3)).astype(np.uint8)
    path = tmp_path / 'c.ppm'
    path.write_bytes(b"P6\n# comment\n4 3\n255\n" + raw.tobytes())
    img = read_ppm(path)
    assert np.array_equal(quantize(img.data), raw)

    write_ppm(img, tmp_path / 'd.ppm')
    assert np.array_equal(load_image(tmp_path / 'd.ppm').data, img.data)


def test_ppm_rejects_16bit_and_truncated(tmp_path):
    deep = tmp_path / 'deep.ppm'
    deep.write_bytes(b"P6\n2 2\n65535\n" + bytes(24))
    with pytest.raises(ImageFormatError):
        read_ppm(deep)

    short = tmp_path / 'short.ppm'
    short.write_bytes(b"P6\n2 2\n255\n" + bytes(5))
    with pytest.raises(ImageFormatError):
        read_ppm(short)


def test_load_missing_file(tmp_path):
    with pytest.raises(ImageFormatError):
        load_image(tmp_path / 'none.png')


def test_to_gray_weights():
    img = ImageF(np.tile([1.0, 0.0, 0.0], (2, 2, 1)))
    assert np.allclose(to_gray(img).data, 0.299)
    assert gray_plane(to_gray(img)).shape == (2, 2)


def test_lab_of_white_and_black():
    white = rgb_to_lab(ImageF(np.ones((2, 2, 3))))
    black = rgb_to_lab(ImageF(np.zeros((2, 2, 3))))
    assert np.allclose(white.L, 100.0, atol=1e-3)
    assert np.allclose(white.a, 0.0, atol=1e-2)
    assert np.allclose(white.b, 0.0, atol=1e-2)
    assert np.allclose(black.L, 0.0)


def test_lab_matches_skimage(rgb_image):
    color = pytest.importorskip('skimage.color')
    expected = color.rgb2lab(rgb_image.data)
    assert np.allclose(rgb_to_lab(rgb_image).data, expected, atol=0.05)


def test_gaussian_kernel_size_and_normalization():
    kernel = gaussian_kernel(1.5)
    assert kernel.size == 11
    assert kernel.weights.shape == (11, 11)
    assert kernel.weights.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        gaussian_kernel(0.0)


def test_convolve_replicates_border():
    plane = np.arange(12, dtype=float).reshape(3, 4)
    identity = np.zeros((3, 3))
    identity[1, 1] = 1.0
    assert np.allclose(convolve2d(plane, identity), plane)

    box = np.full((3, 3), 1.0 / 9.0)
    out = convolve2d(plane, box)
    # 좌상단: 복제 경계 [[0,0,1],[0,0,1],[4,4,5]]
    assert out[0, 0] == pytest.approx((0 + 0 + 1 + 0 + 0 + 1 + 4 + 4 + 5) / 9.0)

    with pytest.raises(ValueError):
        convolve2d(plane, np.ones((2, 2)))


def test_sobel_zero_on_constant_and_positive_on_edge():
    flat = ImageF(np.full((8, 8), 0.4))
    assert np.allclose(sobel_edges(flat).data, 0.0)

    step = np.zeros((8, 8))
    step[:, 4:] = 1.0
    edges = sobel_edges(ImageF(step)).data[:, :, 0]
    assert edges[:, 3].min() > 0.0
    assert edges.max() <= 1.0


def test_block_partition_includes_ragged_edges():
    plane = np.arange(35).reshape(5, 7)
    blocks = block_partition(plane, 2, 3)
    assert len(blocks) == 3 * 3
    assert blocks[0].shape == (2, 3)
    assert blocks[-1].shape == (1, 1)
    assert sum(b.size for b in blocks) == plane.size


def test_resize_center_crops_to_square(rng):
    img = ImageF(rng.uniform(size=(20, 40, 3)))
    out = resize_image(img, 10)
    assert out.shape == (10, 10, 3)
    assert resize_image(out, 10) is out
