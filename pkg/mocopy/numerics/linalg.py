# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from typing import NamedTuple, Tuple

import numpy as np
import numpy.typing as npt

from mocopy.errors import ShapeMismatchError, SvdConvergenceError
from mocopy.types import FloatArray

from .tensor import Tensor

__all__ = [
    'SvdResult',
    'spectral_norm',
    'svd',
    'svt',
]


class SvdResult(NamedTuple):
    """
    Thin singular value decomposition A = u @ diag(s) @ v.T.
    """
    u: FloatArray
    s: FloatArray
    v: FloatArray


def _as_matrix(matrix: npt.ArrayLike | Tensor, operation: str) -> FloatArray:
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(operation, (-1, -1), arr.shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f'{operation}: the matrix has non-finite entries.')
    return arr


def svd(matrix: npt.ArrayLike | Tensor) -> SvdResult:
    """
    Thin SVD through LAPACK's divide-and-conquer driver.

    Singular values come back non-negative and non-increasing; u and v have orthonormal columns.

    Raises:
        SvdConvergenceError: LAPACK did not converge.
    """
    arr = _as_matrix(matrix, 'svd')
    try:
        u, s, vt = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise SvdConvergenceError(float('nan'), str(e)) from e
    return SvdResult(u, s, vt.T)


def svt(matrix: npt.ArrayLike | Tensor, tau: float) -> Tuple[FloatArray, int]:
    """
    Singular value thresholding: the proximal operator of tau times the nuclear norm.

    Returns:
        The shrunk matrix and its rank.
    """
    u, s, v = svd(matrix)
    shrunk = np.maximum(s - tau, 0.0)
    rank = int(np.count_nonzero(shrunk))
    return (u[:, :rank] * shrunk[:rank]) @ v[:, :rank].T, rank


def spectral_norm(matrix: npt.ArrayLike | Tensor) -> float:
    """
    The largest singular value.
    """
    return float(np.linalg.norm(_as_matrix(matrix, 'spectral_norm'), 2))
