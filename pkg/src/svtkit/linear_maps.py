"""Linear maps ``A: R^{n1 x n2} -> R^m`` used by the general-constraint solvers."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError
from .matrix_core import LowRankMatrix, as_dense, lowrank_entries, lowrank_to_dense
from .sampled import IndexSet, SampledMatrix


class LinearMap:
    """Base class: subclasses implement ``apply`` and ``adjoint`` and report ``op_norm_bound``.

    ``apply`` accepts a dense array or a :class:`LowRankMatrix`; ``adjoint``
    returns either a dense array or a :class:`SampledMatrix`.
    """

    n1: int
    n2: int
    m: int

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    def apply(self, x) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y):
        raise NotImplementedError

    @property
    def op_norm_bound(self) -> float:
        raise NotImplementedError

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant of ``X -> b - A(X)``, i.e. the operator norm."""
        return self.op_norm_bound

    def _check_x(self, x):
        shape = x.shape
        if tuple(shape) != self.shape:
            raise DimensionError(f"operand {tuple(shape)} vs map domain {self.shape}")

    def _check_y(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.size != self.m:
            raise DimensionError(f"vector of length {y.size} vs map range {self.m}")
        return y

    def adjoint_error(self, probes: int = 5, seed: int = 0) -> float:
        """Largest ``|<A(X), y> - <X, A*(y)>|`` relative to the norms, over random probes."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(probes):
            x = rng.standard_normal(self.shape)
            y = rng.standard_normal(self.m)
            lhs = float(self.apply(x) @ y)
            aty = self.adjoint(y)
            aty = aty.to_dense() if isinstance(aty, SampledMatrix) else aty
            rhs = float(np.sum(x * aty))
            scale = np.linalg.norm(x) * np.linalg.norm(y) * max(self.op_norm_bound, 1.0)
            worst = max(worst, abs(lhs - rhs) / scale)
        return worst


class SamplingOperator(LinearMap):
    """Extracts the entries indexed by ``omega`` (in its sorted order)."""

    def __init__(self, omega: IndexSet):
        self.omega = omega
        self.n1, self.n2 = omega.shape
        self.m = len(omega)

    def apply(self, x) -> np.ndarray:
        self._check_x(x)
        if isinstance(x, LowRankMatrix):
            return lowrank_entries(x, self.omega.rows, self.omega.cols)
        if isinstance(x, SampledMatrix):
            if x.pattern != self.omega:
                return x.to_dense()[self.omega.rows, self.omega.cols]
            return x.values.copy()
        return as_dense(x)[self.omega.rows, self.omega.cols]

    def adjoint(self, y) -> SampledMatrix:
        return SampledMatrix(self.omega, self._check_y(y))

    @property
    def op_norm_bound(self) -> float:
        return 1.0 if self.m else 0.0


class DenseLinearMap(LinearMap):
    """``A(X) = G @ vec(X)`` with row-major vectorization and ``G`` of shape (m, n1*n2)."""

    def __init__(self, matrix, n1: int, n2: int):
        g = as_dense(matrix)
        if g.shape[1] != n1 * n2:
            raise DimensionError(f"operator has {g.shape[1]} columns, expected {n1 * n2}")
        self.G = g
        self.n1, self.n2 = int(n1), int(n2)
        self.m = g.shape[0]
        self._norm = None

    def apply(self, x) -> np.ndarray:
        self._check_x(x)
        if isinstance(x, LowRankMatrix):
            x = lowrank_to_dense(x)
        elif isinstance(x, SampledMatrix):
            x = x.to_dense()
        return self.G @ np.asarray(x, dtype=np.float64).reshape(-1)

    def adjoint(self, y) -> np.ndarray:
        return (self.G.T @ self._check_y(y)).reshape(self.n1, self.n2)

    @property
    def op_norm_bound(self) -> float:
        if self._norm is None:
            self._norm = float(np.linalg.norm(self.G, 2)) if self.G.size else 0.0
        return self._norm


class StackedLinearMap(LinearMap):
    """Vertical stack ``[s_1 A_1; s_2 A_2; ...]`` of maps on a common domain.

    Pairing ``A`` with ``-A`` turns an equality constraint into two
    inequalities.
    """

    def __init__(self, blocks, signs=None):
        blocks = list(blocks)
        if not blocks:
            raise ValueError("need at least one block")
        shape = blocks[0].shape
        if any(b.shape != shape for b in blocks):
            raise DimensionError("stacked maps must share a domain")
        self.blocks = blocks
        self.signs = [1.0] * len(blocks) if signs is None else [float(s) for s in signs]
        self.n1, self.n2 = shape
        self.m = sum(b.m for b in blocks)
        self._offsets = np.cumsum([0] + [b.m for b in blocks])

    def apply(self, x) -> np.ndarray:
        return np.concatenate([s * b.apply(x) for b, s in zip(self.blocks, self.signs)])

    def adjoint(self, y):
        y = self._check_y(y)
        total = None
        for i, (b, s) in enumerate(zip(self.blocks, self.signs)):
            part = b.adjoint(s * y[self._offsets[i]:self._offsets[i + 1]])
            total = part if total is None else _add(total, part)
        return total

    @property
    def op_norm_bound(self) -> float:
        return float(np.sqrt(sum((abs(s) * b.op_norm_bound) ** 2
                                 for b, s in zip(self.blocks, self.signs))))


def _add(a, b):
    if isinstance(a, SampledMatrix) and isinstance(b, SampledMatrix) and a.pattern == b.pattern:
        return SampledMatrix(a.pattern, a.values + b.values)
    a = a.to_dense() if isinstance(a, SampledMatrix) else a
    b = b.to_dense() if isinstance(b, SampledMatrix) else b
    return a + b


def paired_equality(a: LinearMap, b) -> tuple[StackedLinearMap, np.ndarray]:
    """``A(X) = b`` rewritten as ``A(X) >= b`` and ``-A(X) >= -b``."""
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    return StackedLinearMap([a, a], signs=[1.0, -1.0]), np.concatenate([b, -b])
