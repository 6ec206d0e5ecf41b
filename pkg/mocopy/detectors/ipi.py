# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple, final

import numpy as np
import numpy.typing as npt

from mocopy.decorators import immutable
from mocopy.errors import ImageTooSmallError
from mocopy.helpers import as_image, window_starts
from mocopy.numerics import spectral_norm, svt
from mocopy.types import FloatArray

from .params import IALM_MU_SCALE, IALM_RHO, DetectorParams

__all__ = [
    'IalmResult',
    'PatchImageModel',
    'fold',
    'ialm',
    'ipi',
    'ipi_lambda',
    'unfold',
]

logger = logging.getLogger(__name__)

# The penalty stops growing once it reaches this multiple of its initial value.
_MU_GROWTH_CAP = 1e7

Origin = Tuple[int, int]


def unfold(img: npt.ArrayLike, block: int, stride: int) -> Tuple[FloatArray, Tuple[Origin, ...]]:
    """
    Patch matrix of an image: every block x block window, taken with the given stride plus a last
    window clamped to each border, becomes one column (row-major vectorisation).

    Returns:
        The [block * block, n_windows] matrix and the (row, col) origin of each column.

    Raises:
        ImageTooSmallError: the image cannot hold a single window.
    """
    arr = as_image(img)
    h, w = arr.shape
    if h < block or w < block:
        raise ImageTooSmallError('ipi', block, arr.shape)
    origins = tuple((r, c) for r in window_starts(h, block, stride) for c in window_starts(w, block, stride))
    columns = np.stack([arr[r:r + block, c:c + block].reshape(-1) for r, c in origins], axis=1)
    return columns, origins


def fold(columns: FloatArray, origins: Sequence[Origin], block: int, shape: Tuple[int, int]) -> FloatArray:
    """
    Inverse of unfold: every pixel is the mean of the window entries that cover it.
    """
    total = np.zeros(shape)
    count = np.zeros(shape)
    for j, (r, c) in enumerate(origins):
        total[r:r + block, c:c + block] += columns[:, j].reshape(block, block)
        count[r:r + block, c:c + block] += 1
    return total / np.maximum(count, 1)


def ipi_lambda(matrix_shape: Tuple[int, int], weight: float) -> float:
    return weight / np.sqrt(min(matrix_shape))


class IalmResult(NamedTuple):
    low_rank: FloatArray
    sparse: FloatArray
    converged: bool
    iterations: int
    residual: float


def ialm(d: FloatArray,
         lam: float,
         tol: float,
         max_iter: int,
         rho: float = IALM_RHO,
         mu_scale: float = IALM_MU_SCALE) -> IalmResult:
    """
    Robust PCA, min ||A||_* + lam ||E||_1 subject to D = A + E, by the inexact augmented
    Lagrange multiplier method.

    Each iteration thresholds the singular values of D - E + Y / mu at 1 / mu, soft-thresholds
    D - A + Y / mu at lam / mu, then updates Y += mu (D - A - E) and mu *= rho.
    The iteration stops when ||D - A - E||_F / ||D||_F <= tol.
    """
    norm_fro = np.linalg.norm(d)
    if norm_fro == 0:
        return IalmResult(np.zeros_like(d), np.zeros_like(d), True, 0, 0.0)
    norm_two = spectral_norm(d)
    y = d / max(norm_two, np.abs(d).max() / lam)
    mu = mu_scale / norm_two
    mu_cap = mu * _MU_GROWTH_CAP
    a = np.zeros_like(d)
    e = np.zeros_like(d)
    residual = np.inf

    for it in range(1, max_iter + 1):
        a, rank = svt(d - e + y / mu, 1.0 / mu)
        t = d - a + y / mu
        e = np.sign(t) * np.maximum(np.abs(t) - lam / mu, 0.0)
        z = d - a - e
        y = y + mu * z
        mu = min(mu * rho, mu_cap)
        residual = float(np.linalg.norm(z) / norm_fro)
        logger.debug('IALM iteration %d: rank %d, residual %.3e', it, rank, residual)
        if residual <= tol:
            return IalmResult(a, e, True, it, residual)

    logger.warning('IALM stopped at the %d-iteration cap with residual %.3e.', max_iter, residual)
    return IalmResult(a, e, False, max_iter, residual)


@final
@immutable
@dataclass(frozen=True, eq=False)
class PatchImageModel:
    """
    Decomposition of an infrared patch image into a low-rank background and a sparse target part.

    Attributes:
        d: the patch matrix, one vectorised block x block window per column.
        a: the low-rank estimate.
        e: the sparse estimate.
        origins: the (row, col) origin of every window.
        block: the window side.
        shape: the image shape.
        lam: the sparsity weight used.
        converged: whether the feasibility residual reached the tolerance.
        iterations: the IALM iterations run.
        residual: the final ||D - A - E||_F / ||D||_F.
    """
    d: FloatArray
    a: FloatArray
    e: FloatArray
    origins: Tuple[Origin, ...]
    block: int
    shape: Tuple[int, int]
    lam: float
    converged: bool
    iterations: int
    residual: float

    @property
    def target_image(self) -> FloatArray:
        return fold(self.e, self.origins, self.block, self.shape)

    @property
    def background_image(self) -> FloatArray:
        return fold(self.a, self.origins, self.block, self.shape)


def ipi(img: npt.ArrayLike, params: DetectorParams = DetectorParams()) -> PatchImageModel:
    """
    Infrared patch-image detector: unfold the image, split the patch matrix into low-rank and
    sparse parts, and fold the sparse part back into the target image.

    Non-convergence at the iteration cap is reported through the converged flag.
    """
    arr = as_image(img)
    d, origins = unfold(arr, params.ipi_block, params.ipi_stride)
    lam = ipi_lambda(d.shape, params.ipi_weight)
    result = ialm(d, lam, params.ipi_tol, params.ipi_max_iter)
    return PatchImageModel(d=d, a=result.low_rank, e=result.sparse, origins=origins, block=params.ipi_block,
                           shape=arr.shape, lam=lam, converged=result.converged, iterations=result.iterations,
                           residual=result.residual)
