"""Random completion instances and error metrics.

Factors and noise are drawn from NumPy's PCG64 generator (``default_rng``),
whose ``standard_normal`` uses the ziggurat method. Instances are therefore
bitwise reproducible for a given seed on one platform and statistically
reproducible across platforms.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .matrix_core import LowRankMatrix
from .sampled import IndexSet, SampledMatrix, project, write_matrix_market

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProblemSpec:
    n1: int
    n2: int
    rank: int
    m: int
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("dimensions must be positive")
        if not 0 <= self.rank <= min(self.n1, self.n2):
            raise ValueError(f"rank {self.rank} outside [0, {min(self.n1, self.n2)}]")
        if not 1 <= self.m <= self.n1 * self.n2:
            raise ValueError(f"m={self.m} outside [1, {self.n1 * self.n2}]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.m < degrees_of_freedom(self.n1, self.n2, self.rank):
            log.warning("m=%d is below the %d degrees of freedom of a rank-%d matrix",
                        self.m, degrees_of_freedom(self.n1, self.n2, self.rank), self.rank)

    @classmethod
    def from_oversampling(cls, n1: int, n2: int, rank: int, ratio: float, **kw) -> "ProblemSpec":
        """Spec with ``m = round(ratio * d_r)`` samples."""
        m = int(round(ratio * degrees_of_freedom(n1, n2, rank)))
        return cls(n1, n2, rank, min(m, n1 * n2), **kw)


@dataclass(frozen=True)
class GeneratedProblem:
    spec: ProblemSpec
    M_true: LowRankMatrix
    omega: IndexSet
    obs: SampledMatrix
    clean: SampledMatrix

    @property
    def d_r(self) -> int:
        return degrees_of_freedom(self.spec.n1, self.spec.n2, self.spec.rank)

    @property
    def oversampling(self) -> float:
        return self.spec.m / self.d_r if self.d_r else float("inf")

    @property
    def sampling_fraction(self) -> float:
        return self.spec.m / (self.spec.n1 * self.spec.n2)

    @property
    def noise_ratio(self) -> float:
        return noise_ratio(self.obs.values - self.clean.values, self.clean.values)

    def metrics(self) -> dict:
        return {
            "d_r": self.d_r,
            "m_over_dr": self.oversampling,
            "m_over_n1n2": self.sampling_fraction,
            "noise_ratio": self.noise_ratio,
        }

    def save(self, directory) -> Path:
        """Observations as MatrixMarket, truth as a factor directory, spec as JSON."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        write_matrix_market(self.obs, d / "obs.mtx",
                            comment=f"seed={self.spec.seed} rank={self.spec.rank}")
        self.M_true.save(d / "truth")
        (d / "spec.json").write_text(json.dumps({**asdict(self.spec), **self.metrics()}, indent=2))
        return d


def degrees_of_freedom(n1: int, n2: int, r: int) -> int:
    """``r * (n1 + n2 - r)``, the dimension of the rank-r matrix manifold."""
    if r > min(n1, n2) or r < 0:
        raise ValueError("rank out of range")
    return r * (n1 + n2 - r)


def generate(spec: ProblemSpec) -> GeneratedProblem:
    """Gaussian-factor low-rank matrix sampled uniformly without replacement."""
    rng = np.random.default_rng(spec.seed)
    left = rng.standard_normal((spec.n1, spec.rank))
    right = rng.standard_normal((spec.n2, spec.rank))
    M = LowRankMatrix.from_factors(left, right)
    linear = rng.choice(spec.n1 * spec.n2, size=spec.m, replace=False)
    omega = IndexSet.from_linear(spec.n1, spec.n2, linear)
    # entries computed straight from the factors so P_Omega(M) is exact
    clean_vals = np.einsum("ij,ij->i", left[omega.rows], right[omega.cols])
    clean = SampledMatrix(omega, clean_vals)
    if spec.noise_sigma > 0:
        obs = SampledMatrix(omega, clean_vals + spec.noise_sigma * rng.standard_normal(spec.m))
    else:
        obs = clean.copy()
    return GeneratedProblem(spec, M, omega, obs, clean)


def sigma_for_noise_ratio(n1: int, n2: int, rank: int, ratio: float) -> float:
    """Noise level whose expected noise ratio is ``ratio`` for Gaussian factors.

    Entries of a product of standard Gaussian factors have variance ``rank``.
    """
    return ratio * float(np.sqrt(rank))


def frobenius_distance(x: LowRankMatrix, y: LowRankMatrix) -> float:
    """``||X - Y||_F`` from the factors, without densifying.

    ``X - Y = [Ux Sx, -Uy Sy] [Vx, Vy]^T``; the norm is taken after a thin QR
    of both stacked factors, which avoids the cancellation of expanding
    ``||X||^2 + ||Y||^2 - 2<X, Y>`` when the two are close.
    """
    if x.shape != y.shape:
        raise DimensionError(f"{x.shape} vs {y.shape}")
    if x.rank + y.rank == 0:
        return 0.0
    left = np.hstack([x.U * x.sigma, -(y.U * y.sigma)])
    right = np.hstack([x.V, y.V])
    r_left = np.linalg.qr(left, mode="r")
    r_right = np.linalg.qr(right, mode="r")
    return float(np.linalg.norm(r_left @ r_right.T))


def relative_error(x: LowRankMatrix, m: LowRankMatrix) -> float:
    """``||X - M||_F / ||M||_F`` from the factors, without densifying."""
    if x.shape != m.shape:
        raise DimensionError(f"{x.shape} vs {m.shape}")
    nm = m.frobenius_norm()
    if nm == 0.0:
        raise ZeroDivisionError("reference matrix is zero")
    return frobenius_distance(x, m) / nm


def noise_ratio(z_on_omega, m_on_omega) -> float:
    """``||P_Omega(Z)||_F / ||P_Omega(M)||_F``."""
    z = np.asarray(z_on_omega.values if isinstance(z_on_omega, SampledMatrix) else z_on_omega)
    mm = np.asarray(m_on_omega.values if isinstance(m_on_omega, SampledMatrix) else m_on_omega)
    if z.shape != mm.shape:
        raise DimensionError("noise and signal must share the sampling set")
    denom = float(np.linalg.norm(mm))
    if denom == 0.0:
        raise ZeroDivisionError("signal is zero on the sampling set")
    return float(np.linalg.norm(z)) / denom


def observe(M, omega: IndexSet) -> SampledMatrix:
    return project(M, omega)
