"""Matrices supported on a fixed sampling set and the projector onto it.

The sampling pattern is stored in coordinate form, sorted by (row, col),
together with a CSR row-offset array built once. Because the coordinate order
coincides with CSR order, the value array doubles as the CSR data array and
sparse products go straight through ``scipy.sparse``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, MatrixMarketError
from .matrix_core import LowRankMatrix, as_dense, lowrank_entries

_MM_HEADER = "%%MatrixMarket matrix coordinate real general"


class IndexSet:
    """A set of (row, col) positions inside an ``n_rows x n_cols`` grid."""

    __slots__ = ("n_rows", "n_cols", "rows", "cols", "indptr")

    def __init__(self, n_rows: int, n_cols: int, rows, cols, *, presorted: bool = False):
        rows = np.asarray(rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(cols, dtype=np.int64).reshape(-1)
        if rows.shape != cols.shape:
            raise DimensionError("row and column index arrays differ in length")
        if n_rows < 0 or n_cols < 0:
            raise ValueError("negative dimensions")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols:
                raise IndexError(f"index outside {n_rows}x{n_cols}")
            if not presorted:
                order = np.lexsort((cols, rows))
                rows, cols = rows[order], cols[order]
            lin = rows * n_cols + cols
            if np.any(np.diff(lin) <= 0):
                raise ValueError("duplicate (or unsorted) indices in sampling set")
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.rows = rows
        self.cols = cols
        self.indptr = np.searchsorted(rows, np.arange(n_rows + 1)).astype(np.int64)

    @classmethod
    def full(cls, n_rows: int, n_cols: int) -> "IndexSet":
        r, c = np.divmod(np.arange(n_rows * n_cols, dtype=np.int64), n_cols)
        return cls(n_rows, n_cols, r, c, presorted=True)

    @classmethod
    def from_linear(cls, n_rows: int, n_cols: int, linear) -> "IndexSet":
        lin = np.sort(np.asarray(linear, dtype=np.int64))
        r, c = np.divmod(lin, n_cols)
        return cls(n_rows, n_cols, r, c, presorted=True)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def __len__(self) -> int:
        return int(self.rows.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IndexSet):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
        )

    def __hash__(self):
        return hash((self.shape, len(self)))

    def indices(self) -> list[tuple[int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist()))


class SampledMatrix:
    """Values attached to an :class:`IndexSet`; conceptually zero elsewhere.

    ``values`` may be overwritten in place with :meth:`set_values`; the
    pattern never changes.
    """

    __slots__ = ("pattern", "values", "_csr")

    def __init__(self, pattern: IndexSet, values):
        values = np.array(values, dtype=np.float64).reshape(-1)
        if values.size != len(pattern):
            raise DimensionError(f"{values.size} values for {len(pattern)} indices")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")
        self.pattern = pattern
        self.values = values
        self._csr = None

    @classmethod
    def zeros(cls, pattern: IndexSet) -> "SampledMatrix":
        return cls(pattern, np.zeros(len(pattern)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.pattern.shape

    @property
    def nnz(self) -> int:
        return len(self.pattern)

    def set_values(self, values) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise DimensionError("value update must keep the pattern size")
        self.values[...] = values

    def copy(self) -> "SampledMatrix":
        return SampledMatrix(self.pattern, self.values.copy())

    def csr(self) -> sp.csr_matrix:
        """CSR view sharing ``values`` as its data array."""
        if self._csr is None:
            p = self.pattern
            self._csr = sp.csr_matrix(
                (self.values, p.cols, p.indptr), shape=p.shape, copy=False
            )
        return self._csr

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.pattern.rows, self.pattern.cols] = self.values
        return out

    def __neg__(self) -> "SampledMatrix":
        return SampledMatrix(self.pattern, -self.values)


def project(a, omega: IndexSet) -> SampledMatrix:
    """``P_Omega(A)`` for a dense array or a :class:`LowRankMatrix`."""
    if isinstance(a, LowRankMatrix):
        if a.shape != omega.shape:
            raise DimensionError(f"matrix {a.shape} vs sampling set {omega.shape}")
        return SampledMatrix(omega, lowrank_entries(a, omega.rows, omega.cols))
    a = as_dense(a)
    if a.shape != omega.shape:
        raise DimensionError(f"matrix {a.shape} vs sampling set {omega.shape}")
    return SampledMatrix(omega, a[omega.rows, omega.cols])


def apply(s: SampledMatrix, x) -> np.ndarray:
    """Sparse product ``S @ x`` (x may be a vector or a block of columns)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != s.shape[1]:
        raise DimensionError(f"operand length {x.shape[0]} != {s.shape[1]} columns")
    return s.csr() @ x


def apply_adjoint(s: SampledMatrix, y) -> np.ndarray:
    """Sparse product ``S.T @ y``."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != s.shape[0]:
        raise DimensionError(f"operand length {y.shape[0]} != {s.shape[0]} rows")
    return s.csr().T @ y


def frobenius_norm(s: SampledMatrix) -> float:
    return float(np.linalg.norm(s.values))


def spectral_norm_est(s: SampledMatrix, tol: float = 1e-6, seed: int = 0,
                      max_iter: int = 10_000) -> float:
    """Largest singular value of ``S`` by power iteration on ``S^T S``.

    Iterates until the eigen-residual ``||S^T S v - theta v||`` drops below
    ``tol * theta``; the Rayleigh quotient error is then second order in
    that residual.
    """
    if s.nnz == 0 or not np.any(s.values):
        return 0.0
    v = np.random.default_rng(seed).standard_normal(s.shape[1])
    v /= np.linalg.norm(v)
    theta = 0.0
    for _ in range(max_iter):
        w = apply_adjoint(s, apply(s, v))
        theta = float(v @ w)
        if theta <= 0.0:
            # start vector fell in the null space; perturb
            v = np.random.default_rng(seed + 1).standard_normal(s.shape[1])
            v /= np.linalg.norm(v)
            continue
        res = np.linalg.norm(w - theta * v)
        v = w / np.linalg.norm(w)
        if res <= tol * theta:
            break
    return float(np.sqrt(theta))


def read_matrix_market(path) -> SampledMatrix:
    """Parse a ``coordinate real general`` MatrixMarket file (1-based indices)."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", line=1)
    head = lines[0].split()
    kind = [h.lower() for h in head[1:]]
    if (
        len(head) != 5
        or head[0] != "%%MatrixMarket"
        or kind[:2] != ["matrix", "coordinate"]
        or kind[2] not in ("real", "integer")
        or kind[3] != "general"
    ):
        raise MatrixMarketError(f"unsupported header {lines[0]!r}", line=1)
    lineno = 1
    size = None
    while lineno < len(lines):
        text = lines[lineno].strip()
        lineno += 1
        if text and not text.startswith("%"):
            size = text.split()
            break
    if size is None:
        raise MatrixMarketError("missing size line", line=lineno)
    try:
        n_rows, n_cols, nnz = (int(t) for t in size)
    except ValueError:
        raise MatrixMarketError(f"bad size line {' '.join(size)!r}", line=lineno) from None
    if n_rows < 0 or n_cols < 0 or nnz < 0:
        raise MatrixMarketError("negative size", line=lineno)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    seen: dict[tuple[int, int], int] = {}
    count = 0
    for idx in range(lineno, len(lines)):
        text = lines[idx].strip()
        if not text or text.startswith("%"):
            continue
        where = idx + 1
        if count >= nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", line=where)
        parts = text.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"expected 'row col value', got {text!r}", line=where)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry {text!r}", line=where) from None
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixMarketError(f"index ({i}, {j}) outside {n_rows}x{n_cols}", line=where)
        if not np.isfinite(v):
            raise MatrixMarketError(f"non-finite value {parts[2]!r}", line=where)
        if (i, j) in seen:
            raise MatrixMarketError(
                f"duplicate entry ({i}, {j}), first seen on line {seen[(i, j)]}", line=where
            )
        seen[(i, j)] = where
        rows[count], cols[count], vals[count] = i - 1, j - 1, v
        count += 1
    if count != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {count}", line=len(lines))
    order = np.lexsort((cols, rows))
    pattern = IndexSet(n_rows, n_cols, rows[order], cols[order], presorted=True)
    return SampledMatrix(pattern, vals[order])


def write_matrix_market(s: SampledMatrix, path, comment: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    p = s.pattern
    with path.open("w") as fh:
        fh.write(_MM_HEADER + "\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{p.n_rows} {p.n_cols} {len(p)}\n")
        for i, j, v in zip(p.rows.tolist(), p.cols.tolist(), s.values.tolist()):
            fh.write(f"{i + 1} {j + 1} {v!r}\n")
    return path
