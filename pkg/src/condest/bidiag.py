"""Growable upper-bidiagonal matrix and its triangular solves.

The least-squares loop emits one diagonal entry per iteration and one
superdiagonal entry per iteration after the first; only those two bands
are ever stored (memory stays O(t) no matter how long the iteration
runs).  Inverse iteration against the matrix needs solves with R and
R^T, which are plain back/forward substitutions done by LAPACK's banded
triangular solver.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack


class SingularBidiagonalError(ValueError):
    """A triangular solve hit a zero diagonal entry."""

    def __init__(self, index: int):
        super().__init__(f"zero diagonal entry at index {index}; matrix is singular")
        self.index = index


class BidiagonalUpper:
    """Square upper-bidiagonal matrix stored as its two bands."""

    def __init__(self):
        self._diag: list[float] = []
        self._super: list[float] = []
        self._band = None  # cached (2, t) LAPACK band storage
        self._zero_index = None  # first zero diagonal index in the cached band

    @classmethod
    def from_bands(cls, diag, superdiag) -> "BidiagonalUpper":
        diag = [float(v) for v in diag]
        superdiag = [float(v) for v in superdiag]
        if len(superdiag) != max(len(diag) - 1, 0):
            raise ValueError(
                f"superdiagonal must have {max(len(diag) - 1, 0)} entries, got {len(superdiag)}"
            )
        if not all(np.isfinite(diag)) or not all(np.isfinite(superdiag)):
            raise ValueError("band entries must be finite")
        out = cls()
        out._diag = diag
        out._super = superdiag
        return out

    @property
    def dim(self) -> int:
        return len(self._diag)

    @property
    def diag(self) -> np.ndarray:
        return np.array(self._diag)

    @property
    def superdiag(self) -> np.ndarray:
        return np.array(self._super)

    def append(self, rho: float, theta_prev: float | None = None) -> "BidiagonalUpper":
        """Extend by one row/column: rho goes on the diagonal, theta_prev
        (required from the second append on) on the superdiagonal."""
        rho = float(rho)
        if not np.isfinite(rho):
            raise ValueError("rho must be finite")
        if self._diag and theta_prev is None:
            raise ValueError("theta_prev is required once the matrix is nonempty")
        if not self._diag and theta_prev is not None:
            raise ValueError("theta_prev must be omitted for the first append")
        if theta_prev is not None:
            theta_prev = float(theta_prev)
            if not np.isfinite(theta_prev):
                raise ValueError("theta_prev must be finite")
            self._super.append(theta_prev)
        self._diag.append(rho)
        self._band = None
        self._zero_index = None
        return self

    def _banded(self) -> np.ndarray:
        # LAPACK upper-band storage: row 0 holds the superdiagonal shifted
        # right by one, row 1 the diagonal; rebuilt only after appends
        if self._band is None or self._band.shape[1] != self.dim:
            t = self.dim
            ab = np.zeros((2, t))
            ab[1, :] = self._diag
            if t > 1:
                ab[0, 1:] = self._super
            self._band = ab
            zero = np.nonzero(ab[1] == 0.0)[0]
            self._zero_index = int(zero[0]) if zero.size else None
        return self._band

    def _check_nonsingular(self):
        self._banded()
        if self._zero_index is not None:
            raise SingularBidiagonalError(self._zero_index)

    def solve_upper(self, b) -> np.ndarray:
        """Solve R x = b by back substitution."""
        b = self._check_rhs(b)
        self._check_nonsingular()
        x, info = lapack.dtbtrs(self._band, b, uplo="U", trans="N")
        if info != 0:
            raise SingularBidiagonalError(int(info) - 1)
        return x

    def solve_lower(self, b) -> np.ndarray:
        """Solve R^T x = b by forward substitution."""
        b = self._check_rhs(b)
        self._check_nonsingular()
        x, info = lapack.dtbtrs(self._band, b, uplo="U", trans="T")
        if info != 0:
            raise SingularBidiagonalError(int(info) - 1)
        return x

    def _check_rhs(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.ndim != 1 or b.shape[0] != self.dim:
            raise ValueError(f"right-hand side must have length {self.dim}")
        return b

    def matvec(self, v) -> np.ndarray:
        """Return R v."""
        v = self._check_rhs(v)
        band = self._banded()
        out = band[1] * v
        if self.dim > 1:
            out[:-1] += band[0, 1:] * v[1:]
        return out

    def to_array(self) -> np.ndarray:
        a = np.diag(np.asarray(self._diag, dtype=np.float64))
        if self.dim > 1:
            a[np.arange(self.dim - 1), np.arange(1, self.dim)] = self._super
        return a
