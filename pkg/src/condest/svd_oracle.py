"""Self-contained dense SVD used as the test oracle.

One-sided Jacobi orthogonalizes the columns of A by plane rotations; the
column norms then read off the singular values with high relative
accuracy, which is exactly what certifying tiny singular values needs.
Meant for small matrices (documented guidance: n <= 200); it exists for
verification, not speed.
"""

from __future__ import annotations

import math

import numpy as np

from .linops import DenseMatrix, norm2
from .matgen import random_gaussian_vector

_EPS = float(np.finfo(np.float64).eps)


class JacobiConvergenceError(RuntimeError):
    """The sweep cap was exhausted before the columns became orthogonal."""


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, DenseMatrix):
        return a.to_array()
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return arr


def jacobi_svd(a, max_sweeps: int = 30):
    """One-sided Jacobi SVD of an m-by-n matrix with m >= n.

    Returns (singular_values descending, V with orthonormal columns,
    U with orthonormal columns for the nonzero singular values).
    Convergence means every column pair (i, j) satisfies
    |a_i . a_j| <= eps * ||a_i|| * ||a_j||.
    """
    m0 = _as_matrix(a)
    m, n = m0.shape
    if m < n:
        raise ValueError("requires m >= n (transpose the input)")
    if not np.all(np.isfinite(m0)):
        raise ValueError("entries must be finite")

    work = np.asfortranarray(m0)
    v = np.eye(n, order="F")
    converged = n < 2
    for _ in range(max_sweeps):
        if converged:
            break
        sq = np.einsum("ij,ij->j", work, work)  # refreshed per sweep
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                gamma = float(work[:, p] @ work[:, q])
                if abs(gamma) <= _EPS * math.sqrt(sq[p] * sq[q]):
                    continue
                rotated = True
                zeta = (sq[q] - sq[p]) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                wp = work[:, p].copy()
                work[:, p] = c * wp - s * work[:, q]
                work[:, q] = s * wp + c * work[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
                sq[p] -= t * gamma
                sq[q] += t * gamma
        converged = not rotated
    if not converged:
        raise JacobiConvergenceError(
            f"columns not orthogonal after {max_sweeps} sweeps"
        )

    sigma = np.array([norm2(work[:, j]) for j in range(n)])
    order = np.argsort(sigma)[::-1]
    sigma = sigma[order]
    v = v[:, order]
    u = work[:, order]
    nonzero = sigma > 0.0
    u[:, nonzero] = u[:, nonzero] / sigma[nonzero]
    return sigma, v, u


def pseudo_inverse_apply(a, b, rank_tol: float = 1e-14) -> np.ndarray:
    """Minimum-norm least-squares solution x = V S^+ U^T b, dropping
    singular values below rank_tol * sigma_max."""
    sigma, v, u = jacobi_svd(a)
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (u.shape[0],):
        raise ValueError(f"b must have length {u.shape[0]}")
    if sigma.size == 0 or sigma[0] == 0.0:
        return np.zeros(v.shape[0])
    keep = sigma >= rank_tol * sigma[0]
    coeffs = (u[:, keep].T @ b) / sigma[keep]
    return v[:, keep] @ coeffs


def baseline_sigma_min_by_norm(a, rng: np.random.Generator) -> float:
    """The one-shot estimate ||b|| / ||pinv(A) b|| for a random unit b.

    Always at or above the true smallest singular value; returns +inf
    (degenerate draw) if pinv(A) b vanishes.
    """
    mat = _as_matrix(a)
    m = mat.shape[0]
    g = random_gaussian_vector(m, rng)
    nb = norm2(g)
    if nb == 0.0:
        raise RuntimeError("random generator produced the zero vector")
    b = g / nb
    x = pseudo_inverse_apply(mat, b)
    nx = norm2(x)
    if nx == 0.0:
        return math.inf
    return norm2(b) / nx
