"""Dense helpers and the factored low-rank matrix container.

Dense matrices are plain ``numpy.ndarray`` objects of dtype float64; the
only extra contract is finiteness, enforced by :func:`as_dense`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, NumericalFailure, SizeCapError

DENSE_SVD_CAP = 2000
DENSIFY_CAP = 25_000_000
ORTHO_TOL = 1e-10


def as_dense(a) -> np.ndarray:
    """Return ``a`` as a finite 2-D float64 array (copying only if needed)."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def svd_dense(a, cap: int = DENSE_SVD_CAP):
    """Reduced SVD ``A = U diag(sigma) V^T`` of a small dense matrix.

    All ``min(n1, n2)`` singular values are returned, zeros included.

    Args:
        a: Matrix of shape (n1, n2).
        cap: Largest admissible ``min(n1, n2)``.

    Returns:
        ``(U, sigma, V)`` with ``U`` of shape (n1, r), ``V`` of shape (n2, r)
        and ``sigma`` nonincreasing, where ``r = min(n1, n2)``.
    """
    a = as_dense(a)
    if min(a.shape) > cap:
        raise SizeCapError(f"dense SVD of {a.shape} exceeds cap {cap}")
    if a.size == 0:
        r = min(a.shape)
        return np.zeros((a.shape[0], r)), np.zeros(r), np.zeros((a.shape[1], r))
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"dense SVD did not converge: {exc}") from exc
    return u, s, vt.T


@dataclass(frozen=True)
class LowRankMatrix:
    """``U @ diag(sigma) @ V.T`` with orthonormal factors and positive sigma.

    Zero singular values are never stored, so ``rank`` is the true rank.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=np.float64)
        V = np.asarray(self.V, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64).reshape(-1)
        r = sigma.size
        if U.ndim != 2 or V.ndim != 2 or U.shape[1] != r or V.shape[1] != r:
            raise DimensionError(
                f"factor shapes {U.shape}, {sigma.shape}, {V.shape} are inconsistent"
            )
        if r > min(U.shape[0], V.shape[0]):
            raise DimensionError(f"rank {r} exceeds min dimension")
        if r and (np.any(sigma <= 0) or np.any(np.diff(sigma) > 0)):
            raise ValueError("sigma must be strictly positive and nonincreasing")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def zeros(cls, n1: int, n2: int) -> "LowRankMatrix":
        return cls(np.zeros((n1, 0)), np.zeros(0), np.zeros((n2, 0)))

    @classmethod
    def from_factors(cls, left, right, cap: int = DENSE_SVD_CAP) -> "LowRankMatrix":
        """Build the canonical form of ``left @ right.T`` via two thin QRs."""
        left = as_dense(left)
        right = as_dense(right)
        if left.shape[1] != right.shape[1]:
            raise DimensionError("factor inner dimensions differ")
        if left.shape[1] == 0:
            return cls.zeros(left.shape[0], right.shape[0])
        ql, rl = np.linalg.qr(left)
        qr_, rr = np.linalg.qr(right)
        u, s, v = svd_dense(rl @ rr.T, cap=cap)
        keep = s > s[0] * np.finfo(float).eps * max(left.shape[0], right.shape[0])
        return cls(ql @ u[:, keep], s[keep], qr_ @ v[:, keep])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    @property
    def rank(self) -> int:
        return self.sigma.size

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.sigma))

    def nuclear_norm(self) -> float:
        return float(self.sigma.sum())

    def orthonormality_error(self) -> float:
        """Largest of ``||U^T U - I||_F`` and ``||V^T V - I||_F``."""
        eye = np.eye(self.rank)
        return max(
            float(np.linalg.norm(self.U.T @ self.U - eye)),
            float(np.linalg.norm(self.V.T @ self.V - eye)),
        )

    def to_dense(self, cap: int = DENSIFY_CAP) -> np.ndarray:
        return lowrank_to_dense(self, cap=cap)

    def save(self, directory) -> Path:
        """Write ``U.csv``, ``sigma.csv``, ``V.csv`` and ``meta.json``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        fmt = "%.17g"
        np.savetxt(d / "U.csv", self.U, delimiter=",", fmt=fmt)
        np.savetxt(d / "sigma.csv", self.sigma, fmt=fmt)
        np.savetxt(d / "V.csv", self.V, delimiter=",", fmt=fmt)
        n1, n2 = self.shape
        (d / "meta.json").write_text(json.dumps({"n1": n1, "n2": n2, "rank": self.rank}))
        return d

    @classmethod
    def load(cls, directory) -> "LowRankMatrix":
        d = Path(directory)
        meta = json.loads((d / "meta.json").read_text())
        n1, n2, r = int(meta["n1"]), int(meta["n2"]), int(meta["rank"])
        if r == 0:
            return cls.zeros(n1, n2)
        U = np.loadtxt(d / "U.csv", delimiter=",", ndmin=2).reshape(n1, r)
        V = np.loadtxt(d / "V.csv", delimiter=",", ndmin=2).reshape(n2, r)
        sigma = np.loadtxt(d / "sigma.csv", ndmin=1).reshape(r)
        return cls(U, sigma, V)


def lowrank_to_dense(x: LowRankMatrix, cap: int = DENSIFY_CAP) -> np.ndarray:
    n1, n2 = x.shape
    if n1 * n2 > cap:
        raise SizeCapError(f"densifying a {n1}x{n2} matrix exceeds cap {cap}")
    return (x.U * x.sigma) @ x.V.T


def lowrank_entries(x: LowRankMatrix, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Entries ``X[rows[t], cols[t]]`` in O(len(rows) * rank) without densifying."""
    if x.rank == 0:
        return np.zeros(len(rows))
    return np.einsum("ij,ij->i", x.U[rows] * x.sigma, x.V[cols])


def lowrank_add_project(x: LowRankMatrix, s, sign: int = 1):
    """Return the sampled matrix ``S + sign * P_Omega(X)`` on the pattern of ``S``."""
    from .sampled import SampledMatrix

    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if x.shape != s.shape:
        raise DimensionError(f"low-rank {x.shape} vs sampled {s.shape}")
    vals = s.values + sign * lowrank_entries(x, s.pattern.rows, s.pattern.cols)
    return SampledMatrix(s.pattern, vals)
