"""Benchmark presets reproducing the completion experiments.

Every preset produces a list of result rows sharing one fixed CSV header.
Columns that do not apply to a preset are left empty. The JSON report is
validated against ``schemas/bench_report.schema.json`` before it is written.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .matrix_core import LowRankMatrix
from .problems import (
    ProblemSpec,
    degrees_of_freedom,
    frobenius_distance,
    generate,
    relative_error,
    sigma_for_noise_ratio,
)
from .sampled import SampledMatrix
from .solvers import (
    DANTZIG_FORMS,
    SvtConfig,
    svt_complete,
    svt_complete_dense_reference,
    svt_dantzig,
)

log = logging.getLogger(__name__)

PRESETS = ("table1", "table2", "dantzig", "tau_sweep", "rank_trajectory")
MIN_SCALED_N = 40

RESULT_HEADER = (
    "preset",
    "case",
    "n",
    "rank",
    "m_over_dr",
    "noise_ratio",
    "tau",
    "repetitions",
    "completed",
    "mean_wall_s",
    "mean_iterations",
    "mean_rel_error",
    "mean_final_rank",
    "growth_fraction",
    "nuclear_norm",
    "step_distance",
    "reference_iterations",
    "reference_rel_error",
    "failures",
)

# (n, r, m/d_r, iterations, relative error) for the noiseless experiments
TABLE1 = (
    (1000, 10, 6, 117, 1.64e-4),
    (1000, 50, 4, 114, 1.59e-4),
    (1000, 100, 3, 129, 1.68e-4),
    (5000, 10, 6, 123, 1.73e-4),
    (5000, 50, 5, 108, 1.61e-4),
    (5000, 100, 4, 123, 1.72e-4),
    (10000, 10, 6, 123, 1.73e-4),
    (10000, 50, 5, 110, 1.65e-4),
    (10000, 100, 4, 127, 1.79e-4),
    (20000, 10, 6, 124, 1.73e-4),
    (20000, 50, 5, 111, 1.66e-4),
    (30000, 10, 6, 125, 1.73e-4),
)

# (noise ratio, n, r, m/d_r, iterations, relative error)
TABLE2 = (
    (1e-2, 1000, 10, 6, 51, 0.78e-2),
    (1e-2, 1000, 50, 4, 48, 0.95e-2),
    (1e-2, 1000, 100, 3, 50, 1.13e-2),
    (1e-1, 1000, 10, 6, 19, 0.72e-1),
    (1e-1, 1000, 50, 4, 17, 0.89e-1),
    (1e-1, 1000, 100, 3, 17, 1.01e-1),
    (1.0, 1000, 10, 6, 3, 0.52),
    (1.0, 1000, 50, 4, 3, 0.63),
    (1.0, 1000, 100, 3, 3, 0.69),
)

TAU_MULTIPLIERS = (1, 2, 5, 10, 20)


@dataclass(frozen=True)
class BenchPreset:
    """A named experiment at some dimension scale.

    Attributes:
        name: One of :data:`PRESETS`.
        scale: Multiplier in (0, 1] applied to every matrix dimension.
        repetitions: Independent instances averaged per row.
        only: Optional case filter such as ``"1000x1000,r=10"``; a case is
            kept when every comma-separated token appears in its label.
        n: Dimension override (tau_sweep and rank_trajectory).
        r: Rank override (tau_sweep and rank_trajectory).
        form: Multiplier update of the dantzig preset, ``"split"`` or ``"joint"``.
    """

    name: str
    scale: float = 1.0
    repetitions: int = 5
    only: str | None = None
    n: int | None = None
    r: int | None = None
    form: str = "split"

    def __post_init__(self):
        if self.name not in PRESETS:
            raise ValueError(f"unknown preset {self.name!r}; choose from {PRESETS}")
        if self.form not in DANTZIG_FORMS:
            raise ValueError(f"form must be one of {DANTZIG_FORMS}")
        if not 0 < self.scale <= 1:
            raise ValueError("scale must lie in (0, 1]")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")

    def scaled(self, n: int) -> int:
        ns = int(round(n * self.scale))
        if ns < MIN_SCALED_N:
            raise ValueError(f"scaled dimension {ns} is below {MIN_SCALED_N}")
        return ns

    def selects(self, label: str) -> bool:
        if not self.only:
            return True
        have = set(label.split(","))
        return all(tok.strip() in have for tok in self.only.split(","))


@dataclass(frozen=True)
class _Case:
    label: str
    n: int
    r: int
    ratio: float
    noise: float = 0.0
    ref_iters: float | None = None
    ref_err: float | None = None


def worker_count() -> int:
    """Threads for repetitions: ``SVT_THREADS`` (0 or unset means all cores)."""
    raw = os.environ.get("SVT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"SVT_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("SVT_THREADS must be nonnegative")
    return n or (os.cpu_count() or 1)


def _label(n, r, noise=None):
    base = f"{n}x{n},r={r}"
    return base if noise is None else f"{base},noise={noise:g}"


def _spec(n, r, ratio, seed, noise_sigma=0.0) -> ProblemSpec:
    m = min(int(round(ratio * degrees_of_freedom(n, n, r))), n * n)
    return ProblemSpec(n, n, r, m, noise_sigma=noise_sigma, seed=seed)


def _empty_row(preset: str, case: _Case, reps: int) -> dict:
    row = dict.fromkeys(RESULT_HEADER)
    row.update(preset=preset, case=case.label, n=case.n, rank=case.r, m_over_dr=case.ratio,
               noise_ratio=case.noise, repetitions=reps, completed=0,
               reference_iterations=case.ref_iters, reference_rel_error=case.ref_err,
               failures="")
    return row


def _complete_once(case: _Case, seed: int) -> dict:
    sigma = sigma_for_noise_ratio(case.n, case.n, case.r, case.noise) if case.noise else 0.0
    prob = generate(_spec(case.n, case.r, case.ratio, seed, sigma))
    overrides = {}
    if sigma > 0:
        overrides = dict(stop_rule="noisy_discrepancy", noise_sigma=sigma)
    cfg = SvtConfig.defaults(case.n, case.n, prob.spec.m, **overrides)
    rep = svt_complete(prob.obs, cfg)
    if not rep.converged:
        raise RuntimeError(f"seed {seed}: {rep.status} after {rep.iterations} iterations")
    return {
        "wall": rep.wall_seconds,
        "iterations": rep.iterations,
        "rel_error": relative_error(rep.X, prob.M_true),
        "final_rank": rep.final_rank,
        "growth": rep.growth_fraction(),
    }


def _run_repetitions(fn, case: _Case, seeds, workers: int):
    def safe(seed):
        try:
            return fn(case, seed), None
        except Exception as exc:  # recorded per row, never aborts the sweep
            log.warning("case %s seed %d failed: %s", case.label, seed, exc)
            return None, f"seed {seed}: {exc}"

    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(seeds))) as pool:
            return list(pool.map(safe, seeds))
    return [safe(s) for s in seeds]


def _aggregate(row: dict, outcomes) -> dict:
    done = [o for o, _ in outcomes if o is not None]
    row["completed"] = len(done)
    row["failures"] = "; ".join(e for _, e in outcomes if e)
    if done:
        row["mean_wall_s"] = float(np.mean([d["wall"] for d in done]))
        row["mean_iterations"] = float(np.mean([d["iterations"] for d in done]))
        row["mean_rel_error"] = float(np.mean([d["rel_error"] for d in done]))
        row["mean_final_rank"] = float(np.mean([d["final_rank"] for d in done]))
        row["growth_fraction"] = float(np.mean([d["growth"] for d in done]))
    return row


def _table_cases(preset: BenchPreset) -> list[_Case]:
    cases = []
    if preset.name == "table1":
        for n, r, ratio, it, err in TABLE1:
            cases.append(_Case(_label(n, r), preset.scaled(n), r, ratio, 0.0, it, err))
    else:
        for noise, n, r, ratio, it, err in TABLE2:
            cases.append(_Case(_label(n, r, noise), preset.scaled(n), r, ratio, noise, it, err))
    cases = [c for c in cases if preset.selects(c.label)]
    if not cases:
        raise ValueError(f"--only {preset.only!r} matches no case of {preset.name}")
    return cases


def _run_table(preset: BenchPreset, seed: int, workers: int) -> list[dict]:
    rows = []
    seeds = [seed + i for i in range(preset.repetitions)]
    for case in _table_cases(preset):
        row = _empty_row(preset.name, case, preset.repetitions)
        if case.r > case.n:
            row["failures"] = f"rank {case.r} exceeds scaled dimension {case.n}"
            rows.append(row)
            continue
        log.info("bench %s case %s (n=%d)", preset.name, case.label, case.n)
        rows.append(_aggregate(row, _run_repetitions(_complete_once, case, seeds, workers)))
    return rows


def dantzig_instance(n: int, r: int, seed: int, ratio: float = 5.0):
    """Noisy instance with ``sigma`` one tenth of the mean absolute sampled entry.

    Returns ``(problem, B, E, sigma)`` where ``E`` holds ``sigma`` on every
    observed entry.
    """
    prob = generate(_spec(n, r, ratio, seed))
    sigma = 0.1 * float(np.mean(np.abs(prob.clean.values)))
    rng = np.random.default_rng([seed, 1])
    B = SampledMatrix(prob.omega, prob.clean.values + sigma * rng.standard_normal(prob.spec.m))
    E = SampledMatrix(prob.omega, np.full(prob.spec.m, sigma))
    return prob, B, E, sigma


def _dantzig_once(case: _Case, seed: int, form: str = "split") -> dict:
    prob, B, E, sigma = dantzig_instance(case.n, case.r, seed, case.ratio)
    cfg = SvtConfig.defaults(case.n, case.n, prob.spec.m, k_max=500)
    if case.noise:
        rep = svt_dantzig(B, E, cfg, form=form)
    else:
        rep = svt_complete(prob.clean, cfg)
    if not rep.converged:
        raise RuntimeError(f"seed {seed}: {rep.status} after {rep.iterations} iterations")
    return {
        "wall": rep.wall_seconds,
        "iterations": rep.iterations,
        "rel_error": relative_error(rep.X, prob.M_true),
        "final_rank": rep.final_rank,
        "growth": rep.growth_fraction(),
        "noise_ratio": float(np.linalg.norm(B.values - prob.clean.values)
                             / np.linalg.norm(prob.clean.values)),
    }


def _run_dantzig(preset: BenchPreset, seed: int, workers: int) -> list[dict]:
    n = preset.scaled(preset.n or 1000)
    r = preset.r or 10
    seeds = [seed + i for i in range(preset.repetitions)]
    rows = []
    for label, noisy, ref_iters, ref_err in ((_label(n, r) + ",noisy", True, 200, 0.0769),
                                             (_label(n, r) + ",noiseless", False, 150, None)):
        case = _Case(label, n, r, 5.0, 1.0 if noisy else 0.0, ref_iters, ref_err)
        if not preset.selects(label):
            continue
        outcomes = _run_repetitions(partial(_dantzig_once, form=preset.form), case, seeds,
                                    workers)
        row = _aggregate(_empty_row(preset.name, case, preset.repetitions), outcomes)
        done = [o for o, _ in outcomes if o is not None]
        row["noise_ratio"] = float(np.mean([d["noise_ratio"] for d in done])) if done else None
        rows.append(row)
    return rows


TAU_SWEEP_DELTA = 1.9
DENSE_SWEEP_MAX_N = 200


def tau_sweep(n: int, r: int, seed: int, ratio: float = 6.0, eps: float = 1e-8,
              k_max: int = 100_000, multipliers=TAU_MULTIPLIERS, delta: float = TAU_SWEEP_DELTA):
    """Solve one instance at ``tau = c * n`` for each multiplier ``c``.

    Returns ``(problem, rows)`` with rows ``(tau, report, nuclear_norm,
    distance_to_previous)``. The sweep compares exact minimizers, so it uses
    a step inside the convergence guarantee (``delta < 2``) and a tight
    residual tolerance. Instances up to ``DENSE_SWEEP_MAX_N`` run through
    the dense-SVD path, which performs the same iteration faster at that size.
    """
    prob = generate(_spec(n, r, ratio, seed))
    solve = svt_complete_dense_reference if n <= DENSE_SWEEP_MAX_N else svt_complete
    out = []
    prev: LowRankMatrix | None = None
    for c in multipliers:
        tau = float(c * n)
        cfg = SvtConfig(tau=tau, delta=delta, eps=eps, k_max=k_max)
        rep = solve(prob.obs, cfg)
        dist = None
        if prev is not None:
            dist = frobenius_distance(rep.X, prev)
        out.append((tau, rep, rep.X.nuclear_norm(), dist))
        prev = rep.X
    return prob, out


def _run_tau_sweep(preset: BenchPreset, seed: int, workers: int) -> list[dict]:
    n = preset.scaled(preset.n or 60)
    r = preset.r or 2
    prob, sweep = tau_sweep(n, r, seed)
    rows = []
    for tau, rep, nuc, dist in sweep:
        case = _Case(f"{n}x{n},r={r},tau={tau:g}", n, r, 6.0)
        row = _empty_row(preset.name, case, 1)
        row.update(tau=tau, completed=int(rep.converged), mean_wall_s=rep.wall_seconds,
                   mean_iterations=float(rep.iterations),
                   mean_rel_error=relative_error(rep.X, prob.M_true),
                   mean_final_rank=float(rep.final_rank), growth_fraction=rep.growth_fraction(),
                   nuclear_norm=nuc, step_distance=dist,
                   failures="" if rep.converged else f"{rep.status} after {rep.iterations}")
        rows.append(row)
    return rows


def rank_trajectory(n: int, r: int, seed: int, ratio: float = 6.0):
    """One noiseless solve whose per-iteration rank is the quantity of interest."""
    prob = generate(_spec(n, r, ratio, seed))
    rep = svt_complete(prob.obs, SvtConfig.defaults(n, n, prob.spec.m))
    return prob, rep


def _run_rank_trajectory(preset: BenchPreset, seed: int, workers: int, out_dir=None):
    n = preset.scaled(preset.n or 5000)
    r = preset.r or 10
    prob, rep = rank_trajectory(n, r, seed)
    case = _Case(_label(n, r), n, r, 6.0)
    row = _empty_row(preset.name, case, 1)
    row.update(completed=int(rep.converged), mean_wall_s=rep.wall_seconds,
               mean_iterations=float(rep.iterations),
               mean_rel_error=relative_error(rep.X, prob.M_true),
               mean_final_rank=float(rep.final_rank), growth_fraction=rep.growth_fraction(),
               failures="" if rep.converged else f"{rep.status} after {rep.iterations}")
    if out_dir is not None:
        rep.write_trace(Path(out_dir) / "rank_trajectory_trace.csv")
    return [row], rep


def run_bench(preset: BenchPreset, seed: int, out_dir=None, workers: int | None = None) -> list[dict]:
    """Run a preset and return its rows; with ``out_dir`` also write the result files."""
    workers = worker_count() if workers is None else workers
    if preset.name in ("table1", "table2"):
        rows = _run_table(preset, seed, workers)
    elif preset.name == "dantzig":
        rows = _run_dantzig(preset, seed, workers)
    elif preset.name == "tau_sweep":
        rows = _run_tau_sweep(preset, seed, workers)
    else:
        rows, _ = _run_rank_trajectory(preset, seed, workers, out_dir)
    if out_dir is not None:
        write_results(rows, preset, seed, out_dir)
    return rows


def load_schema() -> dict:
    text = resources.files("svtkit").joinpath("schemas/bench_report.schema.json").read_text()
    return json.loads(text)


def _clean(v):
    if isinstance(v, (np.floating, float)):
        return None if not math.isfinite(float(v)) else float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def report_document(rows, preset: BenchPreset, seed: int) -> dict:
    doc = {
        "preset": preset.name,
        "scale": preset.scale,
        "repetitions": preset.repetitions,
        "seed": seed,
        "header": list(RESULT_HEADER),
        "rows": [{k: _clean(row.get(k)) for k in RESULT_HEADER} for row in rows],
    }
    jsonschema.validate(doc, load_schema())
    return doc


def write_results(rows, preset: BenchPreset, seed: int, out_dir) -> dict[str, Path]:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    doc = report_document(rows, preset, seed)
    paths = {k: d / f"{preset.name}.{k}" for k in ("csv", "json", "txt")}
    with paths["csv"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_HEADER)
        for row in doc["rows"]:
            w.writerow(["" if row[k] is None else row[k] for k in RESULT_HEADER])
    paths["json"].write_text(json.dumps(doc, indent=2))
    paths["txt"].write_text(format_table(doc["rows"]) + "\n")
    return paths


def _fmt(v) -> str:
    if v is None or v == "":
        return "-"
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def format_table(rows) -> str:
    cols = ("case", "completed", "mean_wall_s", "mean_iterations", "mean_rel_error",
            "reference_iterations", "reference_rel_error", "nuclear_norm", "step_distance")
    cells = [cols] + [tuple(_fmt(row.get(c)) for c in cols) for row in rows]
    widths = [max(len(line[i]) for line in cells) for i in range(len(cols))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(line, widths)) for line in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    failures = [f"{row['case']}: {row['failures']}" for row in rows if row.get("failures")]
    if failures:
        lines += ["", "failures:"] + [f"  {f}" for f in failures]
    return "\n".join(lines)
