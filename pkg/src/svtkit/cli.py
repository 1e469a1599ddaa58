"""Command-line interface: ``svt gen|solve|dantzig|bench|check``.

Exit code 0 means success. A solver that does not converge gives 1, and bad
input or an I/O error gives 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import bench
from .check import run_checks
from .errors import MatrixMarketError, SvtError
from .linear_maps import DenseLinearMap
from .problems import ProblemSpec, generate, sigma_for_noise_ratio
from .sampled import SampledMatrix, read_matrix_market
from .solvers import (DANTZIG_FORMS, SolveReport, SvtConfig, svt_complete, svt_dantzig,
                      svt_linear)

log = logging.getLogger("svtkit")

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_INPUT = 0, 1, 2
STOP_NAMES = {"residual": "relative_residual", "gap": "duality_gap", "noisy": "noisy_discrepancy"}


class InputError(Exception):
    """Invalid command-line input; reported with exit code 2."""


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", type=Path, help="observations as a MatrixMarket coordinate file")
    p.add_argument("--tau", type=float, help="threshold (default 5*max(n1, n2))")
    p.add_argument("--delta", type=float, help="step size (default 1.2*n1*n2/m)")
    p.add_argument("--eps", type=float, default=1e-4, help="stopping tolerance")
    p.add_argument("--ell", type=int, default=5, help="growth increment for s_k")
    p.add_argument("--kmax", type=int, default=500, help="iteration cap")
    p.add_argument("--trace", type=Path, help="write the per-iteration trace CSV here")
    p.add_argument("--out", type=Path, help="directory for the solution and summary.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random completion instance")
    g.add_argument("--n1", type=int, required=True)
    g.add_argument("--n2", type=int, help="defaults to n1")
    g.add_argument("--rank", type=int, required=True)
    size = g.add_mutually_exclusive_group(required=True)
    size.add_argument("--m", type=int, help="number of observed entries")
    size.add_argument("--oversampling", type=float, help="m as a multiple of the degrees of freedom")
    noise = g.add_mutually_exclusive_group()
    noise.add_argument("--noise-sigma", type=float, default=0.0)
    noise.add_argument("--noise-ratio", type=float, help="target noise ratio (sets sigma)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)

    s = sub.add_parser("solve", help="matrix completion (or a general linear map)")
    _solver_flags(s)
    s.add_argument("--stop", choices=sorted(STOP_NAMES), default="residual")
    s.add_argument("--noise-sigma", type=float, default=0.0,
                   help="noise level for --stop noisy")
    s.add_argument("--operator", type=Path,
                   help="npz with 'matrix' (m x n1*n2, row-major vec) and 'shape'; "
                        "the input file then holds b as an m x 1 matrix")

    d = sub.add_parser("dantzig", help="entrywise-tolerance (Dantzig selector) recovery")
    _solver_flags(d)
    d.add_argument("--tolerance-sigma", type=float, required=True,
                   help="tolerance E_ij applied to every observed entry")
    d.add_argument("--form", choices=DANTZIG_FORMS, default="split",
                   help="multiplier update: two projected multipliers or one soft-thresholded")

    b = sub.add_parser("bench", help="run a benchmark preset")
    b.add_argument("--preset", choices=bench.PRESETS, required=True)
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--scale", type=float, default=1.0)
    b.add_argument("--repetitions", type=int, default=5)
    b.add_argument("--only", help='case filter, e.g. "1000x1000,r=10"')
    b.add_argument("--n", type=int, help="dimension (tau_sweep, rank_trajectory, dantzig)")
    b.add_argument("--r", type=int, help="rank (tau_sweep, rank_trajectory, dantzig)")
    b.add_argument("--form", choices=DANTZIG_FORMS, default="split",
                   help="multiplier update for the dantzig preset")
    b.add_argument("--out", type=Path, default=Path("bench_out"))

    c = sub.add_parser("check", help="run the invariant suite on small random instances")
    c.add_argument("--seed", type=int, default=0)
    return parser


def _read_obs(path: Path) -> SampledMatrix:
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    return read_matrix_market(path)


def _config(args, n1: int, n2: int, m: int, **extra) -> SvtConfig:
    overrides = dict(eps=args.eps, ell=args.ell, k_max=args.kmax, **extra)
    if args.tau is not None:
        overrides["tau"] = args.tau
    if args.delta is not None:
        overrides["delta"] = args.delta
    return SvtConfig.defaults(n1, n2, m, **overrides)


def _finish(args, rep: SolveReport) -> int:
    if args.trace:
        rep.write_trace(args.trace)
    if args.out:
        rep.X.save(args.out / "X")
        rep.write_summary(args.out / "summary.json")
    print(json.dumps({k: v for k, v in rep.summary().items() if k != "config"}))
    if not rep.converged:
        print(f"not converged: {rep.status} {rep.message}".rstrip(), file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _load_operator(path: Path, m: int) -> DenseLinearMap:
    try:
        with np.load(path) as npz:
            matrix, shape = npz["matrix"], npz["shape"]
    except (OSError, KeyError, ValueError) as exc:
        raise InputError(f"{path}: cannot read operator ({exc})") from exc
    if matrix.ndim != 2 or matrix.shape[0] != m or np.size(shape) != 2:
        raise InputError(f"{path}: expected an {m} x n1*n2 'matrix' and a 2-element 'shape'")
    return DenseLinearMap(matrix, int(shape[0]), int(shape[1]))


def cmd_gen(args) -> int:
    n2 = args.n2 or args.n1
    sigma = args.noise_sigma
    if args.noise_ratio is not None:
        sigma = sigma_for_noise_ratio(args.n1, n2, args.rank, args.noise_ratio)
    if args.m is not None:
        spec = ProblemSpec(args.n1, n2, args.rank, args.m, noise_sigma=sigma, seed=args.seed)
    else:
        spec = ProblemSpec.from_oversampling(args.n1, n2, args.rank, args.oversampling,
                                             noise_sigma=sigma, seed=args.seed)
    prob = generate(spec)
    prob.save(args.out)
    print(json.dumps({"out": str(args.out), "m": spec.m, **prob.metrics()}))
    return EXIT_OK


def cmd_solve(args) -> int:
    obs = _read_obs(args.input)
    extra = dict(stop_rule=STOP_NAMES[args.stop], noise_sigma=args.noise_sigma)
    if args.stop == "noisy" and not args.noise_sigma > 0:
        raise InputError("--stop noisy needs --noise-sigma > 0")
    if args.operator is not None:
        if obs.shape[1] != 1:
            raise InputError(f"{args.input}: with --operator the input must be m x 1")
        b = obs.to_dense()[:, 0]
        op = _load_operator(args.operator, b.size)
        cfg = _config(args, op.n1, op.n2, op.m, **extra)
        return _finish(args, svt_linear(op, b, cfg))
    n1, n2 = obs.shape
    cfg = _config(args, n1, n2, max(obs.nnz, 1), **extra)
    if obs.nnz == 0:
        raise InputError(f"{args.input}: no observed entries")
    return _finish(args, svt_complete(obs, cfg))


def cmd_dantzig(args) -> int:
    obs = _read_obs(args.input)
    if obs.nnz == 0:
        raise InputError(f"{args.input}: no observed entries")
    if args.tolerance_sigma < 0:
        raise InputError("--tolerance-sigma must be nonnegative")
    E = SampledMatrix(obs.pattern, np.full(obs.nnz, args.tolerance_sigma))
    cfg = _config(args, *obs.shape, obs.nnz)
    return _finish(args, svt_dantzig(obs, E, cfg, form=args.form))


def cmd_bench(args) -> int:
    preset = bench.BenchPreset(args.preset, scale=args.scale, repetitions=args.repetitions,
                               only=args.only, n=args.n, r=args.r, form=args.form)
    rows = bench.run_bench(preset, args.seed, out_dir=args.out)
    print(bench.format_table(rows))
    expected = 1 if preset.name in ("tau_sweep", "rank_trajectory") else preset.repetitions
    return EXIT_OK if all(row["completed"] == expected for row in rows) else EXIT_NOT_CONVERGED


def cmd_check(args) -> int:
    results = run_checks(args.seed)
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NOT_CONVERGED


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "dantzig": cmd_dantzig,
            "bench": cmd_bench, "check": cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except MatrixMarketError as exc:
        print(f"error: {getattr(args, 'input', '')}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, OSError, ValueError, SvtError, jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
