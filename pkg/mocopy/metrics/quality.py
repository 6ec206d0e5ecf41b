# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from typing import Final

import numpy as np
import numpy.typing as npt
from scipy.signal import convolve2d

from mocopy.errors import ImageTooSmallError, ShapeMismatchError
from mocopy.helpers import as_image
from mocopy.types import FloatArray

__all__ = [
    'gaussian_window',
    'psnr',
    'ssim',
    'SSIM_K1',
    'SSIM_K2',
    'SSIM_SIGMA',
    'SSIM_WINDOW',
]

SSIM_WINDOW: Final[int] = 11
SSIM_SIGMA: Final[float] = 1.5
SSIM_K1: Final[float] = 0.01
SSIM_K2: Final[float] = 0.03


def _pair(x: npt.ArrayLike, y: npt.ArrayLike, operation: str):
    a, b = as_image(x), as_image(y)
    if a.shape != b.shape:
        raise ShapeMismatchError(operation, a.shape, b.shape)
    return a, b


def psnr(x: npt.ArrayLike, y: npt.ArrayLike, peak: float = 1.0) -> float:
    """
    Peak signal-to-noise ratio in dB, 10 log10(peak^2 / MSE).

    Returns:
        +inf when the images are identical.
    """
    a, b = _pair(x, y, 'psnr')
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return float('inf')
    return float(10 * np.log10(peak * peak / mse))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> FloatArray:
    """
    Normalised size x size Gaussian weights.
    """
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r * r) / (2 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(x: npt.ArrayLike, y: npt.ArrayLike, peak: float = 1.0) -> float:
    """
    Mean structural similarity over every position where the 11 x 11 Gaussian window fits entirely
    inside the image.

    Args:
        x, y: images of the same shape, at least 11 x 11.
        peak: the dynamic range L in C1 = (K1 L)^2 and C2 = (K2 L)^2.
    """
    a, b = _pair(x, y, 'ssim')
    if min(a.shape) < SSIM_WINDOW:
        raise ImageTooSmallError('ssim', SSIM_WINDOW, a.shape)
    w = gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    def filt(img: FloatArray) -> FloatArray:
        return convolve2d(img, w, mode='valid')

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))
