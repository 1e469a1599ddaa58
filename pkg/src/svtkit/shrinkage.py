"""Singular value shrinkage ``D_tau(Y) = U diag((sigma - tau)_+) V^T``.

Only singular values strictly above ``tau`` survive, so the result is always
a valid :class:`LowRankMatrix` with positive sigma.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .matrix_core import DENSE_SVD_CAP, LowRankMatrix, svd_dense
from .partial_svd import PartialSvdParams, svd_above_threshold

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShrinkageOutcome:
    X: LowRankMatrix
    crossed_threshold: bool = True
    s_history: tuple[int, ...] = ()
    sigma_min: float = float("nan")
    lanczos_steps: int = 0
    ambiguous: int = 0

    @property
    def rank(self) -> int:
        return self.X.rank

    @property
    def growth_rounds(self) -> int:
        return max(len(self.s_history) - 1, 0)

    @property
    def s_used(self) -> int:
        return self.s_history[-1] if self.s_history else 0


def _threshold(U, sigma, V, tau: float, tol: float = 0.0):
    keep = sigma > tau
    ambiguous = int(np.count_nonzero(np.abs(sigma - tau) <= tol)) if tol > 0 else 0
    return LowRankMatrix(U[:, keep], sigma[keep] - tau, V[:, keep]), ambiguous


def shrink_dense(y, tau: float, cap: int = DENSE_SVD_CAP) -> ShrinkageOutcome:
    """Shrinkage through a full dense SVD; the reference path for small inputs."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    U, sigma, V = svd_dense(y, cap=cap)
    if tau == 0:
        # drop exact zeros only; they would violate the positive-sigma invariant
        keep = sigma > 0
        X = LowRankMatrix(U[:, keep], sigma[keep], V[:, keep])
        return ShrinkageOutcome(X, True, (sigma.size,), float(sigma.min(initial=0.0)))
    X, _ = _threshold(U, sigma, V, tau)
    return ShrinkageOutcome(X, True, (sigma.size,), float(sigma.min(initial=0.0)))


def shrink_sparse(y, tau: float, s_start: int = 1, ell: int = 5,
                  params: PartialSvdParams | None = None) -> ShrinkageOutcome:
    """Shrinkage of a sampled matrix computing only the triplets above ``tau``.

    Args:
        y: :class:`~svtkit.sampled.SampledMatrix` to shrink.
        tau: Positive threshold.
        s_start: Number of triplets requested in the first round.
        ell: Increment applied while every computed value exceeds ``tau``.
        params: Lanczos settings.
    """
    if not tau > 0:
        raise ValueError("the sparse path needs tau > 0 (tau = 0 requires a full SVD)")
    params = params or PartialSvdParams()
    res = svd_above_threshold(y, tau, s_start=s_start, ell=ell, params=params)
    t = res.triplets
    tol = params.triplet_tol * (t.sigma[0] if t.rank else 0.0)
    X, ambiguous = _threshold(t.U, t.sigma, t.V, tau, tol)
    if ambiguous:
        log.debug("%d singular value(s) within %.3g of tau", ambiguous, tol)
    sigma_min = float(t.sigma[-1]) if t.rank else 0.0
    return ShrinkageOutcome(X, res.crossed_threshold, res.s_history, sigma_min,
                            res.lanczos_steps, ambiguous)


def prox_objective(x, y, tau: float) -> float:
    """``tau * ||X||_* + 0.5 * ||X - Y||_F^2`` for dense ``X`` and ``Y``."""
    x = np.asarray(x, dtype=np.float64)
    nuc = float(np.linalg.svd(x, compute_uv=False).sum())
    return tau * nuc + 0.5 * float(np.sum((x - y) ** 2))


def perturbation_margin(y, tau: float, trials: int = 1000, rng=None,
                        radius=(1e-3, 1.0)) -> float:
    """Smallest ``h(X + D) - h(X)`` over random perturbations of ``X = D_tau(Y)``.

    A nonnegative margin (up to rounding) means no sampled neighbour beats the
    shrinkage output. Perturbation norms are log-uniform in ``radius``.
    """
    rng = np.random.default_rng(rng)
    y = np.asarray(y, dtype=np.float64)
    x = shrink_dense(y, tau).X.to_dense()
    h0 = prox_objective(x, y, tau)
    lo, hi = np.log(radius[0]), np.log(radius[1])
    if trials < 1 or y.size == 0:
        return 0.0
    d = rng.standard_normal((trials,) + y.shape)
    d *= (np.exp(rng.uniform(lo, hi, trials)) / np.linalg.norm(d, axis=(1, 2)))[:, None, None]
    # batched objective: one stacked SVD for all perturbed points
    nuclear = np.linalg.svd(x + d, compute_uv=False).sum(axis=1)
    h = tau * nuclear + 0.5 * np.sum((x + d - y) ** 2, axis=(1, 2))
    return float(np.min(h) - h0)


def subgradient_certificate(y, tau: float) -> tuple[float, float, float]:
    """Residuals of ``Y - X = tau * (U0 V0^T + W)`` for ``X = D_tau(Y)``.

    Returns ``(||W||_2, ||U0^T W||_F, ||W V0||_F)``; a valid certificate has
    the first at most one and the other two zero.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    y = np.asarray(y, dtype=np.float64)
    X = shrink_dense(y, tau).X
    W = (y - X.to_dense()) / tau - X.U @ X.V.T
    spec = float(np.linalg.norm(W, 2)) if W.size else 0.0
    return spec, float(np.linalg.norm(X.U.T @ W)), float(np.linalg.norm(W @ X.V))
