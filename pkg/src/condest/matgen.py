"""Test-matrix generators and the package's seeded randomness.

Matrices with a prescribed singular spectrum are built as U diag(s) V^T
with U, V orthonormalized Gaussian matrices (Householder QR), keeping V
so forward errors can be projected onto the right singular directions.
Random normals come from a Box-Muller transform driven by numpy's
Philox counter-based generator, so every stream is reproducible across
platforms from a (seed, role, index) triple.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linops import DenseMatrix, SparseMatrixCsr, norm2

# Documented substream roles: matrix generation, the power-iteration start
# vector, the per-run right-hand-side draw, and the per-run inverse-iteration
# start vector each get an independent Philox stream.
ROLE_MATGEN = 0
ROLE_POWER = 1
ROLE_XHAT = 2
ROLE_INVERSE = 3


def derive_rng(seed: int, role: int, index: int = 0) -> np.random.Generator:
    """Independent Philox stream keyed by (seed, role, index)."""
    seed, role, index = int(seed), int(role), int(index)
    if seed < 0 or role < 0 or index < 0:
        raise ValueError("seed, role, and index must be nonnegative")
    key = (seed << 64) | (role << 32) | index
    return np.random.Generator(np.random.Philox(key=key))


def random_gaussian_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent standard normals via Box-Muller over Philox uniforms."""
    if n < 1:
        raise ValueError("n must be positive")
    pairs = (n + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1]: keeps log() finite
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(angle)
    out[1::2] = r * np.sin(angle)
    return out[:n]


@dataclass(frozen=True)
class Segment:
    """One block of a spectrum: `count` values with the given placement."""

    count: int
    kind: str  # "constant" | "linear" | "logarithmic"
    lo: float
    hi: float

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("segment count must be positive")
        if self.kind not in ("constant", "linear", "logarithmic"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("segment bounds must be finite")
        if self.lo > self.hi:
            raise ValueError("segment requires lo <= hi")
        if self.lo < 0.0:
            raise ValueError("singular values cannot be negative")
        if self.kind == "logarithmic" and self.lo <= 0.0:
            raise ValueError("logarithmic segments need positive bounds")

    def values(self) -> np.ndarray:
        if self.kind == "constant":
            return np.full(self.count, self.lo)
        if self.count == 1:
            return np.array([self.hi])
        if self.kind == "linear":
            return np.linspace(self.lo, self.hi, self.count)
        return np.geomspace(self.lo, self.hi, self.count)


class SpectrumSpec:
    """A full prescribed spectrum assembled from segments."""

    def __init__(self, segments):
        self.segments = tuple(segments)
        if not self.segments:
            raise ValueError("spectrum needs at least one segment")

    @staticmethod
    def constant(count: int, value: float) -> Segment:
        return Segment(count, "constant", value, value)

    @staticmethod
    def linear(count: int, lo: float, hi: float) -> Segment:
        return Segment(count, "linear", lo, hi)

    @staticmethod
    def logarithmic(count: int, lo: float, hi: float) -> Segment:
        return Segment(count, "logarithmic", lo, hi)

    @property
    def total(self) -> int:
        return sum(s.count for s in self.segments)

    def values(self) -> np.ndarray:
        """All singular values, sorted descending."""
        vals = np.concatenate([s.values() for s in self.segments])
        return np.sort(vals)[::-1].copy()

    def scaled(self, n: int) -> "SpectrumSpec":
        """Same shape of spectrum with segment counts rescaled to total n
        (largest-remainder rounding, every segment keeps at least one value)."""
        if n < len(self.segments):
            raise ValueError(f"need n >= {len(self.segments)} to keep every segment")
        old = self.total
        raw = [s.count * n / old for s in self.segments]
        counts = [max(1, int(r)) for r in raw]
        remainders = sorted(
            range(len(raw)), key=lambda i: raw[i] - int(raw[i]), reverse=True
        )
        k = 0
        while sum(counts) < n:
            counts[remainders[k % len(raw)]] += 1
            k += 1
        while sum(counts) > n:
            i = max(range(len(counts)), key=lambda j: counts[j])
            counts[i] -= 1
        return SpectrumSpec(
            Segment(c, s.kind, s.lo, s.hi) for c, s in zip(counts, self.segments)
        )


@dataclass(frozen=True)
class GeneratedMatrix:
    """A dense matrix with known spectrum and right singular vectors."""

    matrix: DenseMatrix
    right_singular_vectors: np.ndarray
    singular_values: np.ndarray


def _orthonormal(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    g = random_gaussian_vector(rows * cols, rng).reshape(rows, cols)
    q, r = np.linalg.qr(g)
    # canonical column signs so the factor is unique for a given stream
    d = np.sign(np.diag(r))
    d[d == 0.0] = 1.0
    return q * d


def matrix_with_spectrum(
    m: int, n: int, spec: SpectrumSpec, rng: np.random.Generator
) -> GeneratedMatrix:
    """m-by-n dense matrix with the prescribed singular values and random
    singular vectors; the right singular basis is returned with it."""
    if not (m >= n >= 1):
        raise ValueError("requires m >= n >= 1 (transpose wider matrices externally)")
    if spec.total != n:
        raise ValueError(f"spectrum has {spec.total} values, expected n={n}")
    sigma = spec.values()
    u = _orthonormal(m, n, rng)
    v = _orthonormal(n, n, rng)
    a = (u * sigma) @ v.T
    return GeneratedMatrix(
        matrix=DenseMatrix(a), right_singular_vectors=v, singular_values=sigma
    )


_PRESETS = {
    # 90 at 1, 300 log-spaced in [1e-3, 1e-2], 10 at 1e-8
    "fig1": [(90, "constant", 1.0, 1.0), (300, "logarithmic", 1e-3, 1e-2), (10, "constant", 1e-8, 1e-8)],
    # same with the small cluster moved down to 1e-13
    "fig1_deep": [(90, "constant", 1.0, 1.0), (300, "logarithmic", 1e-3, 1e-2), (10, "constant", 1e-13, 1e-13)],
    # numerically rank deficient: small cluster at 1e-16
    "fig3_rankdef": [(90, "constant", 1.0, 1.0), (300, "logarithmic", 1e-3, 1e-2), (10, "constant", 1e-16, 1e-16)],
    # two log clusters far apart plus a constant block
    "fig4_inconsistent": [(50, "logarithmic", 1e-10, 1e-9), (50, "logarithmic", 1e-1, 1.0), (300, "constant", 1.0, 1.0)],
    # everything linearly spread over eight decades
    "fig6_linear": [(400, "linear", 1e-8, 1.0)],
    # half the spectrum log-spread, half at 1
    "fig7_log": [(200, "logarithmic", 1e-3, 1.0), (200, "constant", 1.0, 1.0)],
    # multiple well-separated clusters
    "fig8_clusters": [(10, "constant", 1e-10, 1e-10), (10, "constant", 1e-7, 1e-7), (300, "logarithmic", 1e-3, 1e-2), (80, "constant", 1.0, 1.0)],
}


def preset_names() -> tuple[str, ...]:
    return tuple(_PRESETS)


def preset(name: str) -> tuple[int, int, SpectrumSpec]:
    """Named 1000-by-400 spectrum used by the bundled experiments."""
    try:
        segments = _PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {', '.join(_PRESETS)}"
        ) from None
    spec = SpectrumSpec(Segment(*seg) for seg in segments)
    return 1000, 400, spec


def random_sign_matrix(
    m: int, n: int, nnz_per_col: int = 3, rng: np.random.Generator | None = None
) -> SparseMatrixCsr:
    """Sparse m-by-n matrix with exactly `nnz_per_col` entries per column,
    rows drawn uniformly without replacement, values +/-1 with equal
    probability."""
    if rng is None:
        raise ValueError("rng is required")
    if nnz_per_col < 1:
        raise ValueError("nnz_per_col must be positive")
    if nnz_per_col > m:
        raise ValueError(f"nnz_per_col={nnz_per_col} exceeds row count {m}")
    nnz = nnz_per_col * n
    rows = np.empty(nnz, dtype=np.int64)
    for j in range(n):
        rows[j * nnz_per_col : (j + 1) * nnz_per_col] = rng.choice(
            m, size=nnz_per_col, replace=False
        )
    cols = np.repeat(np.arange(n, dtype=np.int64), nnz_per_col)
    signs = np.where(rng.random(nnz) < 0.5, 1.0, -1.0)

    import scipy.sparse

    coo = scipy.sparse.coo_matrix((signs, (rows, cols)), shape=(m, n))
    csr = coo.tocsr()
    return SparseMatrixCsr(m, n, csr.indptr, csr.indices, csr.data)


def random_unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized Gaussian vector (uniform on the sphere)."""
    for _ in range(3):
        g = random_gaussian_vector(n, rng)
        s = norm2(g)
        if s > 0.0:
            return g / s
    raise RuntimeError("random generator produced the zero vector three times")
