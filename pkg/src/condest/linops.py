"""Matrix representations, the operator abstraction, and Matrix Market I/O.

Every algorithm in this package talks to matrices through
:class:`LinearOperator`: anything with known dimensions that can apply
itself and its transpose to a vector.  Two concrete operators are
provided, a column-major dense matrix and a CSR sparse matrix (the
adjoint of which is applied as a transposed traversal, so only one copy
of the matrix is ever held).
"""

from __future__ import annotations

import abc
import io

import numpy as np
import scipy.sparse


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def norm2(x) -> float:
    """Euclidean norm, scaled by the largest magnitude so that vectors with
    entries near the floating-point range limits do not overflow."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    scale = float(np.max(np.abs(x)))
    if scale == 0.0:
        return 0.0
    y = x / scale
    return scale * float(np.sqrt(np.dot(y, y)))


def _as_vector(x, n: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise ValueError(
            f"{name} must be a vector of length {n}, got shape {x.shape}"
        )
    return x


class LinearOperator(abc.ABC):
    """An m-by-n real operator supporting y = A x and y = A^T x."""

    rows: int
    cols: int

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @abc.abstractmethod
    def apply(self, x) -> np.ndarray:
        """Return A x for a length-``cols`` vector x."""

    @abc.abstractmethod
    def apply_adjoint(self, y) -> np.ndarray:
        """Return A^T y for a length-``rows`` vector y."""


class DenseMatrix(LinearOperator):
    """Dense matrix stored column-major (Fortran order), immutable."""

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64, order="F")
        if a.ndim != 2:
            raise ValueError(f"entries must be 2-dimensional, got ndim={a.ndim}")
        if not np.all(np.isfinite(a)):
            raise ValueError("entries must all be finite")
        self.rows, self.cols = int(a.shape[0]), int(a.shape[1])
        a.setflags(write=False)
        self._a = a

    @classmethod
    def from_column_major(cls, rows: int, cols: int, entries) -> "DenseMatrix":
        flat = np.asarray(entries, dtype=np.float64)
        if flat.size != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {flat.size}")
        return cls(flat.reshape((rows, cols), order="F"))

    @property
    def entries(self) -> np.ndarray:
        """Read-only (rows, cols) array view."""
        return self._a

    def apply(self, x) -> np.ndarray:
        x = _as_vector(x, self.cols, "x")
        return self._a @ x

    def apply_adjoint(self, y) -> np.ndarray:
        y = _as_vector(y, self.rows, "y")
        return self._a.T @ y

    def to_array(self) -> np.ndarray:
        return np.array(self._a)


class SparseMatrixCsr(LinearOperator):
    """Compressed sparse row matrix.

    The adjoint is applied by traversing the same arrays as the transpose
    (a CSC view), so the matrix is held in memory exactly once.
    """

    def __init__(self, rows: int, cols: int, row_offsets, col_indices, values):
        rows, cols = int(rows), int(cols)
        if rows < 0 or cols < 0:
            raise ValueError("dimensions must be nonnegative")
        offsets = np.asarray(row_offsets, dtype=np.int64)
        indices = np.asarray(col_indices, dtype=np.int64)
        vals = np.asarray(values, dtype=np.float64)
        self._validate(rows, cols, offsets, indices, vals)
        self.rows, self.cols = rows, cols
        self.row_offsets = offsets
        self.col_indices = indices
        self.values = vals
        for arr in (offsets, indices, vals):
            arr.setflags(write=False)
        self._csr = scipy.sparse.csr_matrix(
            (vals, indices, offsets), shape=(rows, cols)
        )
        self._csc = self._csr.T  # shares data; no second copy of A

    @staticmethod
    def _validate(rows, cols, offsets, indices, vals):
        if offsets.shape != (rows + 1,):
            raise ValueError(f"row_offsets must have length rows+1={rows + 1}")
        if offsets[0] != 0:
            raise ValueError("row_offsets[0] must be 0")
        if np.any(np.diff(offsets) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        nnz = int(offsets[-1])
        if indices.shape != (nnz,) or vals.shape != (nnz,):
            raise ValueError("col_indices and values must have row_offsets[-1] entries")
        if nnz and (indices.min() < 0 or indices.max() >= cols):
            raise ValueError("col_indices out of range")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if np.any(vals == 0.0):
            raise ValueError("values must be nonzero (drop explicit zeros)")
        if nnz > 1:
            increasing = np.diff(indices) > 0
            # the gap between the last entry of one row and the first of the
            # next is exempt from the strictly-increasing requirement
            boundary = np.zeros(nnz - 1, dtype=bool)
            inner = offsets[1:-1]
            inner = inner[(inner > 0) & (inner < nnz)]
            boundary[inner - 1] = True
            if not np.all(increasing | boundary):
                raise ValueError("col_indices must be strictly increasing within each row")

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    def apply(self, x) -> np.ndarray:
        x = _as_vector(x, self.cols, "x")
        return self._csr @ x

    def apply_adjoint(self, y) -> np.ndarray:
        y = _as_vector(y, self.rows, "y")
        return self._csc @ y

    def to_array(self) -> np.ndarray:
        return self._csr.toarray()


_FORMATS = ("coordinate", "array")
_FIELDS = ("real", "integer", "pattern", "complex")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")


class _LineReader:
    """Yields stripped content lines with their 1-based physical line numbers."""

    def __init__(self, source):
        if isinstance(source, bytes):
            source = source.decode("ascii", errors="replace")
        if isinstance(source, str):
            source = io.StringIO(source)
        self._stream = source
        self.lineno = 0

    def next_raw(self) -> str | None:
        for raw in self._stream:
            self.lineno += 1
            if isinstance(raw, bytes):
                raw = raw.decode("ascii", errors="replace")
            return raw
        return None

    def next_content(self) -> str | None:
        while True:
            raw = self.next_raw()
            if raw is None:
                return None
            stripped = raw.strip()
            if not stripped or stripped.startswith("%"):
                continue
            return stripped


def parse_matrix_market(source):
    """Parse Matrix Market text into a matrix.

    Coordinate files become :class:`SparseMatrixCsr` (symmetric and
    skew-symmetric storage expanded to both triangles, duplicates summed,
    pattern entries set to 1.0); array files become :class:`DenseMatrix`.
    ``source`` may be a string, bytes, or a readable text stream.

    Raises:
        MatrixMarketError: naming the line number of the first problem.
    """
    reader = _LineReader(source)
    header = reader.next_raw()
    if header is None:
        raise MatrixMarketError("empty input", 1)
    tokens = header.strip().split()
    if len(tokens) != 5 or tokens[0] != "%%MatrixMarket":
        raise MatrixMarketError(
            "header must be '%%MatrixMarket matrix <format> <field> <symmetry>'", 1
        )
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", 1)
    if fmt not in _FORMATS:
        raise MatrixMarketError(f"unknown format {fmt!r}", 1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unknown field {field!r}", 1)
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unknown symmetry {symmetry!r}", 1)
    if field == "complex":
        raise MatrixMarketError("complex matrices are not supported", 1)
    if symmetry == "hermitian":
        raise MatrixMarketError("hermitian symmetry is not supported (real data only)", 1)
    if field == "pattern" and fmt == "array":
        raise MatrixMarketError("pattern field is invalid for array format", 1)

    size_line = reader.next_content()
    if size_line is None:
        raise MatrixMarketError("missing size line", reader.lineno + 1)

    if fmt == "coordinate":
        return _parse_coordinate(reader, size_line, field, symmetry)
    return _parse_array(reader, size_line, symmetry)


def _parse_int(token, lineno, what) -> int:
    try:
        return int(token)
    except ValueError:
        raise MatrixMarketError(f"non-integer {what} {token!r}", lineno) from None


def _parse_value(token, lineno) -> float:
    try:
        return float(token)
    except ValueError:
        raise MatrixMarketError(f"non-numeric value {token!r}", lineno) from None


def _parse_coordinate(reader, size_line, field, symmetry):
    size_lineno = reader.lineno
    parts = size_line.split()
    if len(parts) != 3:
        raise MatrixMarketError("coordinate size line must be 'rows cols nnz'", size_lineno)
    rows = _parse_int(parts[0], size_lineno, "row count")
    cols = _parse_int(parts[1], size_lineno, "column count")
    nnz = _parse_int(parts[2], size_lineno, "entry count")
    if rows < 0 or cols < 0 or nnz < 0:
        raise MatrixMarketError("size values must be nonnegative", size_lineno)

    want_value = field != "pattern"
    ii = np.empty(nnz, dtype=np.int64)
    jj = np.empty(nnz, dtype=np.int64)
    vv = np.empty(nnz, dtype=np.float64)
    for k in range(nnz):
        line = reader.next_content()
        if line is None:
            raise MatrixMarketError(
                f"expected {nnz} entries, input ended after {k}", reader.lineno
            )
        parts = line.split()
        expected = 3 if want_value else 2
        if len(parts) != expected:
            raise MatrixMarketError(
                f"entry must have {expected} tokens, got {len(parts)}", reader.lineno
            )
        i = _parse_int(parts[0], reader.lineno, "row index")
        j = _parse_int(parts[1], reader.lineno, "column index")
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise MatrixMarketError(f"index ({i}, {j}) outside {rows}x{cols}", reader.lineno)
        v = _parse_value(parts[2], reader.lineno) if want_value else 1.0
        if symmetry == "skew-symmetric" and i == j:
            raise MatrixMarketError(
                "skew-symmetric matrices cannot store diagonal entries", reader.lineno
            )
        ii[k], jj[k], vv[k] = i - 1, j - 1, v

    if reader.next_content() is not None:
        raise MatrixMarketError(f"unexpected content after {nnz} entries", reader.lineno)

    if symmetry in ("symmetric", "skew-symmetric"):
        off = ii != jj
        sign = -1.0 if symmetry == "skew-symmetric" else 1.0
        ii, jj, vv = (
            np.concatenate([ii, jj[off]]),
            np.concatenate([jj, ii[off]]),
            np.concatenate([vv, sign * vv[off]]),
        )

    coo = scipy.sparse.coo_matrix((vv, (ii, jj)), shape=(rows, cols))
    csr = coo.tocsr()  # sums duplicates, sorts column indices
    csr.eliminate_zeros()
    return SparseMatrixCsr(rows, cols, csr.indptr, csr.indices, csr.data)


def _parse_array(reader, size_line, symmetry):
    size_lineno = reader.lineno
    parts = size_line.split()
    if len(parts) != 2:
        raise MatrixMarketError("array size line must be 'rows cols'", size_lineno)
    rows = _parse_int(parts[0], size_lineno, "row count")
    cols = _parse_int(parts[1], size_lineno, "column count")
    if rows < 0 or cols < 0:
        raise MatrixMarketError("size values must be nonnegative", size_lineno)
    if symmetry != "general" and rows != cols:
        raise MatrixMarketError(f"{symmetry} array matrices must be square", size_lineno)

    a = np.zeros((rows, cols), order="F")
    if symmetry == "general":
        slots = [(i, j) for j in range(cols) for i in range(rows)]
    elif symmetry == "symmetric":
        slots = [(i, j) for j in range(cols) for i in range(j, rows)]
    else:  # skew-symmetric: strictly lower triangle stored, zero diagonal
        slots = [(i, j) for j in range(cols) for i in range(j + 1, rows)]

    for count, (i, j) in enumerate(slots):
        line = reader.next_content()
        if line is None:
            raise MatrixMarketError(
                f"expected {len(slots)} values, input ended after {count}", reader.lineno
            )
        parts = line.split()
        if len(parts) != 1:
            raise MatrixMarketError(
                f"array entries must be one value per line, got {len(parts)} tokens",
                reader.lineno,
            )
        v = _parse_value(parts[0], reader.lineno)
        a[i, j] = v
        if symmetry == "symmetric" and i != j:
            a[j, i] = v
        elif symmetry == "skew-symmetric":
            a[j, i] = -v

    if reader.next_content() is not None:
        raise MatrixMarketError(
            f"unexpected content after {len(slots)} values", reader.lineno
        )
    return DenseMatrix(a)


def to_matrix_market(matrix: LinearOperator) -> str:
    """Serialize a matrix as coordinate real general text, entries sorted
    by (row, column), 1-based indices."""
    if isinstance(matrix, SparseMatrixCsr):
        rows, cols = matrix.rows, matrix.cols
        r = np.repeat(np.arange(rows), np.diff(matrix.row_offsets))
        c = matrix.col_indices
        v = matrix.values
    elif isinstance(matrix, DenseMatrix):
        a = matrix.entries
        r, c = np.nonzero(a)
        v = a[r, c]
        rows, cols = matrix.rows, matrix.cols
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
    else:
        raise TypeError(f"cannot serialize {type(matrix).__name__}")
    lines = ["%%MatrixMarket matrix coordinate real general"]
    lines.append(f"{rows} {cols} {len(v)}")
    for i, j, val in zip(r, c, v):
        lines.append(f"{i + 1} {j + 1} {val!r}")
    return "\n".join(lines) + "\n"
