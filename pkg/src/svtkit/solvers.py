"""Singular value thresholding solvers.

All variants are Uzawa (dual ascent) iterations on
``min tau*||X||_* + 0.5*||X||_F^2`` under linear constraints::

    X^k = D_tau(A*(y^{k-1}))
    y^k = y^{k-1} + delta * (b - A(X^k))        equality
    y^k = [y^{k-1} + delta * (b - A(X^k))]_+    inequality

Matrix completion is the sampling-operator case, where the multiplier is a
sparse matrix supported on the observed set.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import NumericalFailure, SizeCapError
from .linear_maps import LinearMap, SamplingOperator
from .matrix_core import (
    DENSE_SVD_CAP,
    LowRankMatrix,
    lowrank_entries,
    lowrank_to_dense,
    svd_dense,
)
from .partial_svd import PartialSvdParams
from .sampled import SampledMatrix, spectral_norm_est
from .shrinkage import ShrinkageOutcome, shrink_dense, shrink_sparse

log = logging.getLogger(__name__)

STOP_RULES = ("relative_residual", "duality_gap", "noisy_discrepancy")
TRACE_HEADER = ("k", "residual", "rank", "s_k", "sigma_min", "wall_ms")
GAP_DENSE_CAP = 4_000_000

# divergence detector: residual >= FACTOR x its first value for RUN iterations
DIVERGENCE_FACTOR = 10.0
DIVERGENCE_RUN = 20


@dataclass(frozen=True)
class SvtConfig:
    """Solver hyperparameters.

    ``delta`` outside the proven-safe range for the chosen variant is rejected
    unless ``unsafe_step`` is set. ``stall_tol`` (multiplier stall for the
    inequality variants) defaults to ``eps``.
    """

    tau: float
    delta: float
    eps: float = 1e-4
    ell: int = 5
    k_max: int = 500
    svd_params: PartialSvdParams = field(default_factory=PartialSvdParams)
    stop_rule: str = "relative_residual"
    gap_tol: float = 1e-4
    noise_sigma: float = 0.0
    noise_eps: float = 0.05
    unsafe_step: bool = False
    skip_k0: bool = True
    track_gap: bool = False
    stall_tol: float | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.ell < 1:
            raise ValueError("ell must be at least 1")
        if self.stop_rule not in STOP_RULES:
            raise ValueError(f"stop_rule must be one of {STOP_RULES}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")

    @classmethod
    def defaults(cls, n1: int, n2: int, m: int, **overrides) -> "SvtConfig":
        """tau = 5*max(n1, n2), delta = 1.2*n1*n2/m, eps = 1e-4, ell = 5.

        The step exceeds the proven bound, so ``unsafe_step`` is switched on.
        """
        if m <= 0:
            raise ValueError("need at least one observation")
        params = dict(tau=5.0 * max(n1, n2), delta=1.2 * n1 * n2 / m)
        params.update(overrides)
        params.setdefault("unsafe_step", True)
        cfg = cls(**params)
        if cfg.unsafe_step:
            log.info("step size delta=%.4g exceeds the convergence guarantee; "
                     "relying on the divergence detector", cfg.delta)
        return cfg

    @property
    def stall(self) -> float:
        return self.eps if self.stall_tol is None else self.stall_tol

    def check_step(self, bound: float, what: str) -> None:
        if not self.delta < bound and not self.unsafe_step:
            raise ValueError(
                f"delta={self.delta:.4g} violates the {what} bound delta < {bound:.4g}; "
                "set unsafe_step=True to run anyway"
            )

    def echo(self) -> dict:
        d = asdict(self)
        d["svd_params"] = asdict(self.svd_params)
        return d


@dataclass(frozen=True)
class TraceRow:
    k: int
    residual: float
    rank: int
    s_k: int
    sigma_min: float
    wall_ms: float
    growth_rounds: int = 0


@dataclass
class SolveReport:
    status: str
    iterations: int
    X: LowRankMatrix
    trajectory: list[TraceRow]
    config: SvtConfig
    wall_seconds: float = 0.0
    k0: int = 0
    gaps: list[tuple[float, float]] = field(default_factory=list)
    multiplier: object = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def relative_residual(self) -> float:
        return self.trajectory[-1].residual if self.trajectory else float("nan")

    @property
    def final_rank(self) -> int:
        return self.X.rank

    @property
    def ranks(self) -> list[int]:
        return [row.rank for row in self.trajectory]

    def growth_fraction(self) -> float:
        """Fraction of iterations that needed more than one growth round."""
        if not self.trajectory:
            return 0.0
        return sum(row.growth_rounds > 1 for row in self.trajectory) / len(self.trajectory)

    def summary(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "relative_residual": self.relative_residual,
            "final_rank": self.final_rank,
            "wall_seconds": self.wall_seconds,
            "config": self.config.echo(),
        }

    def write_trace(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_HEADER)
            for row in self.trajectory:
                w.writerow([row.k, repr(row.residual), row.rank, row.s_k,
                            repr(row.sigma_min), f"{row.wall_ms:.3f}"])
        return path

    def write_summary(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.summary(), indent=2, default=_json_default))
        return path


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def read_trace(path) -> list[dict]:
    with Path(path).open() as fh:
        return [
            {
                "k": int(r["k"]),
                "residual": float(r["residual"]),
                "rank": int(r["rank"]),
                "s_k": int(r["s_k"]),
                "sigma_min": float(r["sigma_min"]),
                "wall_ms": float(r["wall_ms"]),
            }
            for r in csv.DictReader(fh)
        ]


def compute_k0(tau: float, delta: float, pom_spectral: float) -> int:
    """Integer ``k0`` with ``tau / (delta * ||P_Omega(M)||_2)`` in ``(k0 - 1, k0]``."""
    if not (tau > 0 and delta > 0 and pom_spectral > 0):
        raise ValueError("tau, delta and the spectral norm must be positive")
    return max(1, math.ceil(tau / (delta * pom_spectral)))


def noisy_stop_check(x, obs_b: SampledMatrix, m: int, sigma: float, eps: float) -> bool:
    """``||P_Omega(X - B)||_F^2 <= (1 + eps) * m * sigma^2``."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    p = obs_b.pattern
    if isinstance(x, LowRankMatrix):
        vals = lowrank_entries(x, p.rows, p.cols)
    else:
        vals = np.asarray(x, dtype=np.float64)[p.rows, p.cols]
    r2 = float(np.sum((vals - obs_b.values) ** 2))
    return r2 <= (1.0 + eps) * m * sigma ** 2


def _f_tau(tau: float, nuclear: float, fro2: float) -> float:
    return tau * nuclear + 0.5 * fro2


def duality_gap(x: LowRankMatrix, y_prev: SampledMatrix, obs: SampledMatrix, tau: float,
                cap: int = GAP_DENSE_CAP) -> tuple[float, float]:
    """Lower/upper bounds ``(a_k, b_k)`` bracketing the optimal value.

    ``a_k`` is the Lagrangian at ``(X^k, Y^{k-1})``; ``b_k`` is the objective
    at the feasible point ``X^k + P_Omega(M - X^k)``, which is dense, hence
    the size cap.
    """
    n1, n2 = obs.shape
    if n1 * n2 > cap or min(n1, n2) > DENSE_SVD_CAP:
        raise SizeCapError(
            f"duality gap needs a dense {n1}x{n2} matrix (cap {cap}); "
            "use the relative-residual rule at this size"
        )
    p = obs.pattern
    resid = obs.values - lowrank_entries(x, p.rows, p.cols)
    a = _f_tau(tau, x.nuclear_norm(), x.frobenius_norm() ** 2) + float(y_prev.values @ resid)
    xt = lowrank_to_dense(x, cap=cap)
    xt[p.rows, p.cols] += resid
    _, s, _ = svd_dense(xt)
    b = _f_tau(tau, float(s.sum()), float(np.sum(xt * xt)))
    return a, b


class _Loop:
    """Shared iteration bookkeeping: trace rows, timing, divergence detection."""

    def __init__(self, cfg: SvtConfig):
        self.cfg = cfg
        self.rows: list[TraceRow] = []
        self.t_start = time.perf_counter()
        self.t_last = self.t_start
        self.first_residual = None
        self.run = 0

    def record(self, k: int, residual: float, out: ShrinkageOutcome) -> None:
        now = time.perf_counter()
        self.rows.append(TraceRow(k, float(residual), out.rank, out.s_used, out.sigma_min,
                                  1000.0 * (now - self.t_last), out.growth_rounds))
        self.t_last = now

    def diverged(self, residual: float) -> bool:
        if self.first_residual is None:
            self.first_residual = residual
            return False
        if residual >= DIVERGENCE_FACTOR * self.first_residual and residual > 0:
            self.run += 1
        else:
            self.run = 0
        return self.run >= DIVERGENCE_RUN

    def report(self, status, k, X, **kw) -> SolveReport:
        return SolveReport(status, k, X, self.rows, self.cfg,
                           time.perf_counter() - self.t_start, **kw)


def _shrink(operand, cfg: SvtConfig, s_start: int) -> ShrinkageOutcome:
    if isinstance(operand, SampledMatrix):
        return shrink_sparse(operand, cfg.tau, s_start=s_start, ell=cfg.ell,
                             params=cfg.svd_params)
    return shrink_dense(operand, cfg.tau)


def _next_s(rank: int, shape) -> int:
    return min(rank + 1, min(shape))


def svt_complete(obs: SampledMatrix, cfg: SvtConfig,
                 callback: Callable | None = None) -> SolveReport:
    """Recover a low-rank matrix from the sampled entries ``obs = P_Omega(M)``.

    Args:
        obs: Observed entries.
        cfg: Solver settings; ``stop_rule`` selects the relative residual,
            the duality gap (small problems only) or the noisy discrepancy.
        callback: Called as ``callback(k, X_k, Y_prev)`` after each
            shrinkage. ``Y_prev`` is reused between calls; copy it to keep it.

    Returns:
        A :class:`SolveReport`; ``status`` is one of ``converged``,
        ``max_iters``, ``diverged`` or ``numerical_failure``.
    """
    if obs.nnz == 0:
        raise ValueError("no observations")
    cfg.check_step(2.0, "matrix completion")
    loop = _Loop(cfg)
    n1, n2 = obs.shape
    m = obs.nnz
    norm_obs = float(np.linalg.norm(obs.values))
    track_gap = cfg.track_gap or cfg.stop_rule == "duality_gap"
    if norm_obs == 0.0:
        X = LowRankMatrix.zeros(n1, n2)
        loop.record(1, 0.0, ShrinkageOutcome(X, True, (), 0.0))
        return loop.report("converged", 1, X, multiplier=obs.copy())

    k0 = 0
    Y = obs.copy()
    if cfg.skip_k0:
        k0 = compute_k0(cfg.tau, cfg.delta, spectral_norm_est(obs))
        Y.values *= k0 * cfg.delta
    else:
        Y.values[:] = 0.0
    rows, cols = obs.pattern.rows, obs.pattern.cols
    X = LowRankMatrix.zeros(n1, n2)
    gaps = []
    status = "max_iters"
    message = ""
    k = 0
    for k in range(1, cfg.k_max + 1):
        try:
            out = _shrink(Y, cfg, _next_s(X.rank, obs.shape))
        except NumericalFailure as exc:
            status, message, k = "numerical_failure", str(exc), k - 1
            break
        X = out.X
        resid = obs.values - lowrank_entries(X, rows, cols)
        rel = float(np.linalg.norm(resid)) / norm_obs
        loop.record(k, rel, out)
        if callback is not None:
            callback(k, X, Y)
        if track_gap:
            gaps.append(duality_gap(X, Y, obs, cfg.tau))
        if _stopped(cfg, rel, resid, m, gaps):
            status = "converged"
            break
        if loop.diverged(rel):
            status, message = "diverged", "relative residual kept growing"
            break
        Y.values += cfg.delta * resid
    return loop.report(status, k, X, k0=k0, gaps=gaps, multiplier=Y, message=message)


def _stopped(cfg: SvtConfig, rel: float, resid: np.ndarray, m: int, gaps) -> bool:
    if cfg.stop_rule == "relative_residual":
        return rel <= cfg.eps
    if cfg.stop_rule == "noisy_discrepancy":
        return float(resid @ resid) <= (1.0 + cfg.noise_eps) * m * cfg.noise_sigma ** 2
    a, b = gaps[-1]
    return b - a <= cfg.gap_tol * max(1.0, abs(b))


def _adjoint_spectral(aty) -> float:
    if isinstance(aty, SampledMatrix):
        return spectral_norm_est(aty)
    return float(svd_dense(aty)[1][0]) if aty.size else 0.0


def svt_linear(a: LinearMap, b, cfg: SvtConfig, callback: Callable | None = None) -> SolveReport:
    """Minimize ``f_tau`` subject to ``A(X) = b`` by Uzawa iterations from ``y = 0``.

    The initial zero iterates are skipped in closed form as in
    :func:`svt_complete`. ``callback(k, X_k, y_prev)`` is invoked per
    iteration. Stopping uses ``||b - A(X)|| / ||b|| <= eps`` or, with
    ``stop_rule="noisy_discrepancy"``, the discrepancy bound.
    """
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if b.size != a.m:
        raise ValueError(f"b has length {b.size}, map range is {a.m}")
    if cfg.stop_rule == "duality_gap":
        raise ValueError("the duality-gap rule is implemented for completion only")
    cfg.check_step(2.0 / a.op_norm_bound ** 2, "Uzawa (2/||A||^2)")
    loop = _Loop(cfg)
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        X = LowRankMatrix.zeros(a.n1, a.n2)
        loop.record(1, 0.0, ShrinkageOutcome(X, True, (), 0.0))
        return loop.report("converged", 1, X, multiplier=np.zeros_like(b))
    k0 = 0
    y = np.zeros_like(b)
    if cfg.skip_k0:
        k0 = compute_k0(cfg.tau, cfg.delta, _adjoint_spectral(a.adjoint(b)))
        y = (k0 * cfg.delta) * b
    X = LowRankMatrix.zeros(a.n1, a.n2)
    status, message, k = "max_iters", "", 0
    for k in range(1, cfg.k_max + 1):
        try:
            out = _shrink(a.adjoint(y), cfg, _next_s(X.rank, a.shape))
        except NumericalFailure as exc:
            status, message, k = "numerical_failure", str(exc), k - 1
            break
        X = out.X
        resid = b - a.apply(X)
        rel = float(np.linalg.norm(resid)) / norm_b
        loop.record(k, rel, out)
        if callback is not None:
            callback(k, X, y)
        if _stopped(cfg, rel, resid, a.m, None):
            status = "converged"
            break
        if loop.diverged(rel):
            status, message = "diverged", "relative residual kept growing"
            break
        y = y + cfg.delta * resid
    return loop.report(status, k, X, k0=k0, multiplier=y, message=message)


def svt_inequality(a: LinearMap, b, cfg: SvtConfig,
                   callback: Callable | None = None) -> SolveReport:
    """Minimize ``f_tau`` subject to ``A(X) >= b`` (componentwise).

    Projected dual ascent from ``y = 0``. Converged when the relative
    constraint violation ``||(b - A(X))_+|| / ||b||`` is at most ``eps`` and
    the multiplier has stalled, ``||y^k - y^{k-1}|| / max(1, ||y^k||) <= stall_tol``.
    """
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if b.size != a.m:
        raise ValueError(f"b has length {b.size}, map range is {a.m}")
    cfg.check_step(2.0 / a.lipschitz ** 2, "projected Uzawa (2/L^2)")
    loop = _Loop(cfg)
    scale = float(np.linalg.norm(b)) or 1.0
    y = np.zeros_like(b)
    X = LowRankMatrix.zeros(a.n1, a.n2)
    status, message, k = "max_iters", "", 0
    for k in range(1, cfg.k_max + 1):
        try:
            out = _shrink(a.adjoint(y), cfg, _next_s(X.rank, a.shape))
        except NumericalFailure as exc:
            status, message, k = "numerical_failure", str(exc), k - 1
            break
        X = out.X
        slack = b - a.apply(X)
        violation = float(np.linalg.norm(np.maximum(slack, 0.0))) / scale
        loop.record(k, violation, out)
        if callback is not None:
            callback(k, X, y)
        y_new = np.maximum(y + cfg.delta * slack, 0.0)
        step = float(np.linalg.norm(y_new - y)) / max(1.0, float(np.linalg.norm(y_new)))
        y = y_new
        if violation <= cfg.eps and step <= cfg.stall:
            status = "converged"
            break
        if loop.diverged(violation):
            status, message = "diverged", "constraint violation kept growing"
            break
    return loop.report(status, k, X, multiplier=y, message=message)


DANTZIG_FORMS = ("split", "joint")


def svt_dantzig(obs: SampledMatrix, tolerances: SampledMatrix, cfg: SvtConfig,
                callback: Callable | None = None, form: str = "split") -> SolveReport:
    """Matrix Dantzig selector: ``min ||X||_*`` s.t. ``|B_ij - X_ij| <= E_ij`` on Omega.

    ``form="split"`` runs two nonnegative multipliers ``Y+`` and ``Y-`` on
    Omega, started at zero::

        X^k  = D_tau(Y+ - Y-)
        Y+- <- [Y+- + delta * (+-(B - X^k) - E)]_+

    Its gradient map has Lipschitz constant 2, so once an entry carries both
    multipliers the effective step on ``Y+ - Y-`` is ``2 * delta``.

    ``form="joint"`` keeps the single signed multiplier ``Y = Y+ - Y-`` and
    takes the proximal step of the dual term ``-<E, |Y|>``::

        Y <- soft(Y + delta * (B - X^k), delta * E)

    which has the same fixed points with Lipschitz constant 1. The reported
    multipliers are ``(Y+, Y-)`` in both forms.

    Converged once every sampled residual is within ``E_ij + eps * rms(B)``
    and the stacked multiplier has stalled (relative change <= stall_tol).
    The recorded residual is ``||P_Omega(X - B)||_F / ||P_Omega(B)||_F``.
    """
    if form not in DANTZIG_FORMS:
        raise ValueError(f"form must be one of {DANTZIG_FORMS}")
    if tolerances.pattern != obs.pattern:
        raise ValueError("tolerances must share the observation pattern")
    E = tolerances.values
    if np.any(E < 0):
        raise ValueError("tolerances must be nonnegative")
    if obs.nnz == 0:
        raise ValueError("no observations")
    if form == "split":
        cfg.check_step(1.0, "Dantzig selector (2/L^2 with L^2 = 2)")
    else:
        cfg.check_step(2.0, "Dantzig selector, joint multiplier")
    loop = _Loop(cfg)
    n1, n2 = obs.shape
    rows, cols = obs.pattern.rows, obs.pattern.cols
    B = obs.values
    norm_b = float(np.linalg.norm(B)) or 1.0
    slack_tol = E + cfg.eps * norm_b / math.sqrt(obs.nnz)
    y_plus = np.zeros(obs.nnz)
    y_minus = np.zeros(obs.nnz)
    Y = SampledMatrix.zeros(obs.pattern)
    X = LowRankMatrix.zeros(n1, n2)
    status, message, k = "max_iters", "", 0
    for k in range(1, cfg.k_max + 1):
        Y.set_values(y_plus - y_minus)
        try:
            out = _shrink(Y, cfg, _next_s(X.rank, obs.shape))
        except NumericalFailure as exc:
            status, message, k = "numerical_failure", str(exc), k - 1
            break
        X = out.X
        r = B - lowrank_entries(X, rows, cols)
        rel = float(np.linalg.norm(r)) / norm_b
        loop.record(k, rel, out)
        if callback is not None:
            callback(k, X, Y)
        if form == "split":
            new_plus = np.maximum(y_plus + cfg.delta * (r - E), 0.0)
            new_minus = np.maximum(y_minus + cfg.delta * (-r - E), 0.0)
        else:
            z = Y.values + cfg.delta * r
            new_plus = np.maximum(z - cfg.delta * E, 0.0)
            new_minus = np.maximum(-z - cfg.delta * E, 0.0)
        change = math.sqrt(float(np.sum((new_plus - y_plus) ** 2) + np.sum((new_minus - y_minus) ** 2)))
        size = math.sqrt(float(new_plus @ new_plus + new_minus @ new_minus))
        y_plus, y_minus = new_plus, new_minus
        if np.all(np.abs(r) <= slack_tol) and change / max(1.0, size) <= cfg.stall:
            status = "converged"
            break
        if loop.diverged(rel):
            status, message = "diverged", "residual kept growing"
            break
    return loop.report(status, k, X, multiplier=(SampledMatrix(obs.pattern, y_plus),
                                                 SampledMatrix(obs.pattern, y_minus)),
                       message=message)


def svt_convex(argmin: Callable, constraints: Callable, m: int, shape, cfg: SvtConfig,
               callback: Callable | None = None) -> SolveReport:
    """Projected Uzawa for general convex constraints ``f_i(X) <= 0``.

    There is no closed form for the inner step, so the caller supplies it:
    ``argmin(y)`` must return the minimizer of ``f_tau(X) + <y, F(X)>`` as a
    :class:`LowRankMatrix`, and ``constraints(X)`` the vector ``F(X)``.
    The multiplier update is ``y <- [y + delta * F(X)]_+`` and stopping
    follows :func:`svt_inequality`. No step-size bound is checked.
    """
    loop = _Loop(cfg)
    y = np.zeros(m)
    X = LowRankMatrix.zeros(*shape)
    status, k = "max_iters", 0
    for k in range(1, cfg.k_max + 1):
        X = argmin(y)
        f = np.asarray(constraints(X), dtype=np.float64)
        violation = float(np.linalg.norm(np.maximum(f, 0.0)))
        loop.record(k, violation, ShrinkageOutcome(X, True, (), float("nan")))
        if callback is not None:
            callback(k, X, y)
        y_new = np.maximum(y + cfg.delta * f, 0.0)
        step = float(np.linalg.norm(y_new - y)) / max(1.0, float(np.linalg.norm(y_new)))
        y = y_new
        if violation <= cfg.eps and step <= cfg.stall:
            status = "converged"
            break
    return loop.report(status, k, X, multiplier=y)


def svt_complete_dense_reference(obs: SampledMatrix, cfg: SvtConfig,
                                 callback: Callable | None = None) -> SolveReport:
    """Completion loop with every shrinkage done by a full dense SVD.

    Slow and small-scale only; it exists to cross-check :func:`svt_complete`.
    """
    sampler = SamplingOperator(obs.pattern)
    loop = _Loop(cfg)
    n1, n2 = obs.shape
    norm_obs = float(np.linalg.norm(obs.values))
    k0 = 0
    Yd = np.zeros((n1, n2))
    if cfg.skip_k0:
        k0 = compute_k0(cfg.tau, cfg.delta, float(svd_dense(obs.to_dense())[1][0]))
        Yd[obs.pattern.rows, obs.pattern.cols] = k0 * cfg.delta * obs.values
    X = LowRankMatrix.zeros(n1, n2)
    status, k = "max_iters", 0
    for k in range(1, cfg.k_max + 1):
        out = shrink_dense(Yd, cfg.tau)
        X = out.X
        resid = obs.values - sampler.apply(X)
        rel = float(np.linalg.norm(resid)) / norm_obs
        loop.record(k, rel, out)
        if callback is not None:
            callback(k, X, Yd)
        if rel <= cfg.eps:
            status = "converged"
            break
        Yd[obs.pattern.rows, obs.pattern.cols] += cfg.delta * resid
    return loop.report(status, k, X, k0=k0)
