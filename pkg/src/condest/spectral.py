"""Power iteration for the largest singular value and inverse iteration
for the smallest singular value of the stored bidiagonal matrix.

Both run a fixed number of iterations chosen from the Klein-Lu bound, so
the relative error is below a requested epsilon with probability at
least 1 - delta regardless of spectral gaps.  Both return Rayleigh
quotients, so the errors are one-sided: the sigma_max estimate never
exceeds the true value and the sigma_min estimate never falls below it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bidiag import BidiagonalUpper
from .linops import LinearOperator, norm2
from .matgen import random_gaussian_vector


def power_iteration_count(epsilon: float, delta: float, n) -> int:
    """Iterations sufficient for a relative error below epsilon with
    probability at least 1 - delta on an n-column matrix, with no
    assumption on the spectral gap."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if n < 1:
        raise ValueError("n must be at least 1")
    return math.ceil(
        (1.0 / epsilon)
        * (2.0 * math.log(2.0 * n) + math.log(1.0 / (epsilon * delta * delta)))
    )


@dataclass(frozen=True)
class SigmaMaxEstimate:
    """Largest-singular-value estimate with its certifying unit vector."""

    sigma_hat: float
    certificate: np.ndarray
    iterations: int


def estimate_sigma_max(
    A: LinearOperator, epsilon: float, delta: float, rng: np.random.Generator
) -> SigmaMaxEstimate:
    """Power iteration on A^T A from a random unit start.

    The returned value is ||A v|| for the final unit iterate v, hence a
    Rayleigh quotient: it never exceeds sigma_max, and it is at least
    (1 - epsilon) * sigma_max with probability at least 1 - delta.
    """
    n = A.cols
    k = power_iteration_count(epsilon, delta, n)
    for _ in range(3):
        g = random_gaussian_vector(n, rng)
        ng = norm2(g)
        if ng == 0.0:
            continue
        v = g / ng
        dead = False
        for _ in range(k):
            z = A.apply_adjoint(A.apply(v))
            nz = norm2(z)
            if nz == 0.0:
                dead = True  # v landed in the null space; try a fresh start
                break
            v = z / nz
        if not dead:
            sigma = norm2(A.apply(v))
            return SigmaMaxEstimate(sigma_hat=sigma, certificate=v, iterations=k)
    raise ValueError(
        "three random starting vectors were annihilated; the operator appears to be zero"
    )


def inverse_power_sigma_min(
    R: BidiagonalUpper, epsilon: float, delta: float, rng: np.random.Generator
) -> float:
    """Inverse power iteration on R^T R via two bidiagonal solves per step.

    Returns ||R v|| for the final unit iterate: always >= sigma_min(R),
    and <= sigma_min(R) / (1 - epsilon) with probability >= 1 - delta.
    A zero diagonal entry means R is exactly singular and 0 is returned.
    """
    t = R.dim
    if t == 0:
        raise ValueError("R is empty")
    if np.any(R.diag == 0.0):
        return 0.0
    k = power_iteration_count(epsilon, delta, t)
    g = random_gaussian_vector(t, rng)
    ng = norm2(g)
    if ng == 0.0:
        g = random_gaussian_vector(t, rng)
        ng = norm2(g)
    v = g / ng
    for _ in range(k):
        z = R.solve_upper(R.solve_lower(v))
        nz = norm2(z)
        if not math.isfinite(nz) or nz == 0.0:
            # solves overflowed: R is singular to within floating point,
            # keep the last finite iterate (its Rayleigh quotient is still
            # an upper bound)
            break
        v = z / nz
    return norm2(R.matvec(v))
