from .core import (
    ImageF,
    GrayImage,
    LabImage,
    GaussianKernel,
    gaussian_kernel,
    load_image,
    save_image,
    read_ppm,
    write_ppm,
    resize_image,
    resample,
    to_gray,
    gray_plane,
    rgb_to_lab,
    convolve2d,
    sobel_edges,
    sobel_magnitude,
    block_partition,
    quantize,
    scale255,
)

__all__ = [
    'ImageF', 'GrayImage', 'LabImage', 'GaussianKernel', 'gaussian_kernel',
    'load_image', 'save_image', 'read_ppm', 'write_ppm', 'resize_image', 'resample',
    'to_gray', 'gray_plane', 'rgb_to_lab', 'convolve2d', 'sobel_edges',
    'sobel_magnitude', 'block_partition', 'quantize', 'scale255',
]
