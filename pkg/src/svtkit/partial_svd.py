"""Dominant singular triplets of a sparse operator.

Golub-Kahan-Lanczos bidiagonalization with partial reorthogonalization
(Simon/Larsen omega recurrences). The recurrence used is the upper
bidiagonal one::

    alpha_1 u_1         = A v_1
    beta_j  v_{j+1}     = A^T u_j     - alpha_j v_j
    alpha_{j+1} u_{j+1} = A v_{j+1}   - beta_j  u_j

so that ``A V_k = U_k B_k`` and ``A^T U_k = V_k B_k^T + beta_k v_{k+1} e_k^T``.
A Ritz triplet ``(theta, U_k p, V_k q)`` of ``B_k`` therefore has residual
``|beta_k * p[k-1]|`` on the transpose side and zero on the forward side.

Converged Ritz vectors are finished with one Rayleigh-Ritz pass on the span
of the right Ritz vectors, which restores orthonormality to working
precision (partial reorthogonalization only guarantees about sqrt(eps)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalFailure
from .matrix_core import LowRankMatrix
from .sampled import SampledMatrix

log = logging.getLogger(__name__)

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class PartialSvdParams:
    """Tuning knobs for the Lanczos engine.

    ``max_lanczos_steps=None`` means ``10 * s + 30``.
    """

    max_lanczos_steps: int | None = None
    reorth_threshold: float = float(np.sqrt(_EPS))
    triplet_tol: float = 1e-8
    seed: int = 0
    full_reorth: bool = False

    def __post_init__(self):
        if not self.triplet_tol > 0:
            raise ValueError("triplet_tol must be positive")
        if self.max_lanczos_steps is not None and self.max_lanczos_steps < 1:
            raise ValueError("max_lanczos_steps must be positive")
        if not self.reorth_threshold > 0:
            raise ValueError("reorth_threshold must be positive")

    def steps_for(self, s: int) -> int:
        steps = 10 * s + 30 if self.max_lanczos_steps is None else self.max_lanczos_steps
        if steps < s:
            raise ValueError(f"max_lanczos_steps={steps} is smaller than s={s}")
        return steps


@dataclass
class LanczosInfo:
    steps: int = 0
    reorthogonalizations: int = 0
    restarts: int = 0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class ThresholdedSvdResult:
    """Output of :func:`svd_above_threshold`.

    ``s_history`` lists every ``s`` requested, starting at ``s_start``.
    """

    triplets: LowRankMatrix
    computed_count: int
    crossed_threshold: bool
    s_history: tuple[int, ...]
    lanczos_steps: int = 0

    @property
    def growth_rounds(self) -> int:
        return len(self.s_history) - 1


class _Operator:
    """Forward/transpose products, oriented so that ``n_right <= n_left``.

    Running the recurrence on the orientation with the shorter right side
    guarantees the right basis spans its whole space at ``k = min(n1, n2)``,
    where the factorization becomes exact.
    """

    def __init__(self, a):
        mat = a.csr() if isinstance(a, SampledMatrix) else a
        n1, n2 = a.shape
        self.transposed = n2 > n1
        if self.transposed:
            self.fwd, self.adj = mat.T, mat
            self.shape = (n2, n1)
        else:
            self.fwd, self.adj = mat, mat.T
            self.shape = (n1, n2)

    def mv(self, x):
        return self.fwd @ x

    def rmv(self, y):
        return self.adj @ y


def _cgs2(basis: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Orthogonalize ``x`` against the columns of ``basis`` (Gram-Schmidt, twice)."""
    if basis.shape[1] == 0:
        return x
    for _ in range(2):
        x = x - basis @ (basis.T @ x)
    return x


def _random_orthogonal(rng, basis: np.ndarray, n: int):
    """Unit vector orthogonal to ``basis``, or None if the basis is complete."""
    if basis.shape[1] >= n:
        return None
    for _ in range(3):
        x = _cgs2(basis, rng.standard_normal(n))
        nrm = np.linalg.norm(x)
        if nrm > 1e-8 * np.sqrt(n):
            x = _cgs2(basis, x / nrm)
            return x / np.linalg.norm(x)
    return None


def _omega_noise(anorm: float, norm: float) -> float:
    # rounding contribution added to each orthogonality estimate per step
    return _EPS * anorm / norm if norm > 0 else 1.0


def _lanczos_triplets(a, s: int, params: PartialSvdParams):
    op = _Operator(a)
    n1, n2 = op.shape
    dim = n2
    if not 1 <= s <= dim:
        raise ValueError(f"s={s} must lie in [1, {dim}]")
    kmax = min(params.steps_for(s), dim)
    info = LanczosInfo()
    rng = np.random.default_rng(params.seed)

    U = np.zeros((n1, kmax), order="F")
    V = np.zeros((n2, kmax), order="F")
    alpha = np.zeros(kmax)
    beta = np.zeros(kmax)
    # mu[i] estimates u_latest . u_i, nu[i] estimates v_latest . v_i
    mu = np.zeros(kmax)
    nu = np.zeros(kmax)
    thr = params.reorth_threshold
    full = params.full_reorth
    anorm = 0.0
    force_u = force_v = False
    v_restarted = False
    exact = False
    ritz = None
    next_check = s

    v = rng.standard_normal(n2)
    V[:, 0] = v / np.linalg.norm(v)
    nu[0] = 1.0
    k = 0
    while k < kmax:
        j = k
        # left vector u_j
        w = op.mv(V[:, j])
        if j > 0:
            w -= beta[j - 1] * U[:, j - 1]
        a_j = np.linalg.norm(w)
        new_mu = np.empty(j)
        if j > 0:
            new_mu[:] = alpha[:j] * nu[:j] - beta[j - 1] * mu[:j]
            new_mu[: j - 1] += beta[: j - 1] * nu[1:j]
            if a_j > 0:
                new_mu /= a_j
            new_mu += np.sign(new_mu) * _omega_noise(anorm, a_j)
            new_mu[j - 1] = _EPS
            if full or force_u or np.max(np.abs(new_mu)) > thr:
                w = _cgs2(U[:, :j], w)
                a_j = np.linalg.norm(w)
                new_mu[:] = _EPS
                info.reorthogonalizations += 1
                force_u = not force_u and not full
        anorm = max(anorm, np.hypot(a_j, beta[j - 1] if j > 0 else 0.0))
        if anorm == 0.0:
            return LowRankMatrix.zeros(*a.shape), info
        if a_j <= _EPS * anorm * np.sqrt(n1):
            if v_restarted or j == 0:
                # a fresh random direction lies in the null space: the row
                # space is already spanned and B_j is exact
                exact = True
                break
            w = _random_orthogonal(rng, U[:, :j], n1)
            if w is None:
                exact = True
                break
            info.restarts += 1
            a_j = 0.0
            new_mu[:] = _EPS
            U[:, j] = w
        else:
            U[:, j] = w / a_j
        alpha[j] = a_j
        mu[:j] = new_mu
        mu[j] = 1.0
        k = j + 1

        # right vector v_{j+1}
        w = op.rmv(U[:, j]) - a_j * V[:, j]
        b_j = np.linalg.norm(w)
        new_nu = alpha[:k] * mu[:k] - a_j * nu[:k]
        new_nu[1:] += beta[:j] * mu[:j]
        if b_j > 0:
            new_nu /= b_j
        new_nu += np.sign(new_nu) * _omega_noise(anorm, b_j)
        new_nu[j] = _EPS
        if full or force_v or np.max(np.abs(new_nu)) > thr:
            w = _cgs2(V[:, :k], w)
            b_j = np.linalg.norm(w)
            new_nu[:] = _EPS
            info.reorthogonalizations += 1
            force_v = not force_v and not full
        anorm = max(anorm, np.hypot(a_j, b_j))
        breakdown = k >= dim or b_j <= _EPS * anorm * np.sqrt(n2)
        beta[j] = 0.0 if breakdown else b_j

        # after a breakdown keep going (unless out of room) so that repeated
        # singular values hidden from the first Krylov block get a chance
        # the k x k Ritz SVD costs O(k^3), so test at geometrically spaced k
        due = k >= next_check or k >= kmax or breakdown
        if k >= s and due and (not breakdown or k >= kmax):
            next_check = k + max(1, k // 10)
            ritz = _ritz(alpha, beta, k)
            P, thetas, _ = ritz
            bounds = np.abs(beta[j] * P[k - 1, :s])
            if np.all(bounds <= params.triplet_tol * thetas[0]):
                break
            ritz = None
        if k >= kmax:
            break
        v_restarted = breakdown
        if breakdown:
            w = _random_orthogonal(rng, V[:, :k], n2)
            if w is None:
                exact = True
                break
            info.restarts += 1
            V[:, k] = w
            nu[:k] = _EPS
        else:
            V[:, k] = w / b_j
            nu[:k] = new_nu
        nu[k] = 1.0

    info.steps = k
    if ritz is None:
        if not exact and beta[k - 1] != 0.0:
            raise NumericalFailure(
                f"Lanczos bidiagonalization did not converge {s} triplets in {kmax} steps"
            )
        ritz = _ritz(alpha, beta, k)
    return _finish(op, U[:, :k], V[:, :k], ritz, s, info)


def _ritz(alpha, beta, k):
    B = np.diag(alpha[:k]) + np.diag(beta[: k - 1], 1)
    P, thetas, Qt = np.linalg.svd(B)
    return P, thetas, Qt.T


def _finish(op, Uk, Vk, ritz, s, info):
    n1, n2 = op.shape
    _, thetas, Q = ritz
    s = min(s, thetas.size)
    cut = thetas[0] * _EPS * n1 if thetas.size else 0.0
    s = int(np.count_nonzero(thetas[:s] > cut))
    if s == 0:
        out = LowRankMatrix.zeros(n1, n2)
    else:
        # Rayleigh-Ritz on the span of the right Ritz vectors
        vs, _ = np.linalg.qr(Vk @ Q[:, :s])
        uu, sig, zt = np.linalg.svd(op.mv(vs), full_matrices=False)
        vv = vs @ zt.T
        keep = sig > sig[0] * _EPS * n1
        uu, sig, vv = uu[:, keep], sig[keep], vv[:, keep]
        info.residuals = np.linalg.norm(op.rmv(uu) - vv * sig, axis=0)
        out = LowRankMatrix(uu, sig, vv)
    if op.transposed:
        out = LowRankMatrix(out.V, out.sigma, out.U)
    return out, info


def top_singular_triplets(s_mat, s: int, params: PartialSvdParams | None = None,
                          return_info: bool = False):
    """The ``s`` largest singular triplets of a sampled (or any sparse) matrix.

    If the matrix has rank below ``s`` only the nonzero triplets come back,
    so callers detect a short count through ``result.rank < s``.

    Raises:
        NumericalFailure: the Ritz residuals did not reach ``triplet_tol``
            within ``max_lanczos_steps``.
    """
    params = params or PartialSvdParams()
    lr, info = _lanczos_triplets(s_mat, int(s), params)
    if return_info:
        return lr, info
    return lr


def _triplets_with_retry(s_mat, s: int, params: PartialSvdParams):
    try:
        return _lanczos_triplets(s_mat, s, params)
    except NumericalFailure:
        # clustered spectra near the top occasionally need a longer Krylov
        # space; one retry with a tripled budget before giving up
        budget = min(3 * params.steps_for(s), min(s_mat.shape))
        if budget <= params.steps_for(s):
            raise
        log.info("partial SVD retry for s=%d with %d steps", s, budget)
        return _lanczos_triplets(s_mat, s, replace(params, max_lanczos_steps=budget))


def svd_above_threshold(s_mat, tau: float, s_start: int = 1, ell: int = 5,
                        params: PartialSvdParams | None = None) -> ThresholdedSvdResult:
    """Grow ``s`` by ``ell`` until a computed singular value is at most ``tau``.

    Each growth round recomputes the factorization from scratch. A round
    that fails to converge within ``max_lanczos_steps`` is retried once
    with three times the budget before the failure propagates.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if s_start < 1 or ell < 1:
        raise ValueError("s_start and ell must be at least 1")
    params = params or PartialSvdParams()
    dim = min(s_mat.shape)
    s = min(int(s_start), dim)
    history = []
    steps = 0
    while True:
        history.append(s)
        lr, info = _triplets_with_retry(s_mat, s, params)
        steps += info.steps
        crossed = lr.rank > 0 and lr.sigma[-1] <= tau
        if lr.rank == 0:
            # zero operator: nothing exceeds tau
            crossed = False
            break
        if crossed or lr.rank < s or s >= dim:
            break
        s = min(s + ell, dim)
    log.debug("svd_above_threshold: s history %s, crossed=%s", history, crossed)
    return ThresholdedSvdResult(lr, s, bool(crossed), tuple(history), steps)
