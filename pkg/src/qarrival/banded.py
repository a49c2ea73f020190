"""Banded complex LU factorisation backed by LAPACK ``zgbtrf``/``zgbtrs``."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack


class SingularSystemError(np.linalg.LinAlgError):
    pass


def bandwidths(matrix) -> tuple[int, int]:
    """Lower and upper bandwidth of a sparse matrix (explicit zeros ignored)."""
    coo = sp.coo_array(matrix)
    nz = coo.data != 0
    if not nz.any():
        return 0, 0
    off = coo.col[nz].astype(np.int64) - coo.row[nz]
    return int(max(0, -off.min())), int(max(0, off.max()))


def to_lapack_band(matrix, kl: int, ku: int) -> np.ndarray:
    """Pack into the ``(2*kl + ku + 1, n)`` layout zgbtrf expects."""
    coo = sp.coo_array(matrix)
    n = coo.shape[0]
    ab = np.zeros((2 * kl + ku + 1, n), dtype=complex)
    # A[i, j] -> ab[kl + ku + i - j, j]
    np.add.at(ab, (kl + ku + coo.row - coo.col, coo.col), coo.data)
    return ab


class BandedLU:
    """Factor once, solve many times.

    Crank-Nicolson reuses the same left-hand matrix at every step, so
    factorising up front halves the per-step cost compared to
    ``scipy.linalg.solve_banded``.
    """

    def __init__(self, matrix):
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError("matrix must be square")
        self.n = matrix.shape[0]
        self.kl, self.ku = bandwidths(matrix)
        ab = to_lapack_band(matrix, self.kl, self.ku)
        lu, piv, info = lapack.zgbtrf(ab, self.kl, self.ku)
        if info > 0:
            raise SingularSystemError(f"banded matrix is singular (zero pivot at row {info - 1})")
        if info < 0:
            raise ValueError(f"zgbtrf: illegal argument {-info}")
        self._lu, self._piv = lu, piv

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x, info = lapack.zgbtrs(self._lu, self.kl, self.ku, np.asarray(rhs, dtype=complex), self._piv)
        if info != 0:
            raise ValueError(f"zgbtrs: illegal argument {-info}")
        return x
