"""Command-line interface: solve paths, re-solve perturbed instances online,
benchmark, and re-validate emitted artifacts.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 partial path
(truncated run with artifacts written).
"""

import argparse
import math
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import data
from .barrier import Problem, multipliers
from .corrector import CorrectorConfig
from .exceptions import (
    AsymmetricInput,
    CovpathError,
    DegenerateInstance,
    NonPositiveDiagonal,
    ParseError,
)
from .path import PathConfig, cardinality, run_online, run_path, solve_at
from .symmat import invert_pd

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4

INPUT_ERRORS = (ParseError, AsymmetricInput, NonPositiveDiagonal, DegenerateInstance, ValueError)


def _parse_gen_spec(text: str, fallback_seed: int) -> data.GeneratorSpec:
    fields = {}
    for item in text.split(","):
        if not item:
            continue
        key, _, value = item.partition("=")
        if not value:
            raise ValueError(f"bad --gen item {item!r}; expected key=value")
        fields[key.strip()] = value.strip()
    try:
        return data.GeneratorSpec(
            n=int(fields["n"]),
            density=float(fields.get("density", 0.10)),
            seed=int(fields.get("seed", fallback_seed)),
            identity_shift_margin=float(fields.get("margin", 0.1)),
        )
    except KeyError as exc:
        raise ValueError(f"--gen needs n=<int> (missing {exc})") from exc


def _load_instance(args) -> tuple[np.ndarray, dict]:
    if args.gen:
        spec = _parse_gen_spec(args.gen, args.seed)
        sigma, _ = data.generate_problem(spec)
        meta = {"n": sigma.shape[0], "source": f"gen:{args.gen}", "seed": spec.seed}
    elif args.sigma:
        sigma = data.load_covariance(args.sigma)
        meta = {"n": sigma.shape[0], "source": f"sigma:{args.sigma}", "seed": None}
    elif args.samples:
        sigma = data.load_samples(args.samples)
        meta = {"n": sigma.shape[0], "source": f"samples:{args.samples}", "seed": None}
    else:
        raise ValueError("one of --sigma, --samples or --gen is required")
    return sigma, meta


def _write_run_artifacts(out: Path, result, summary: dict, write_matrices: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    data.dump_json(out / "summary.json", summary)
    data.dump_json(out / "timings.json", data.build_timings(result))
    if result.points:
        last = result.points[-1]
        data.dump_json(
            out / "state.json", data.build_state(result.sigma, last.U, last.rho, result.t)
        )
    card_rows = np.array(
        [[math.log10(pt.rho), pt.cardinality / result.sigma.shape[0] ** 2] for pt in result.points]
    )
    cg_rows = np.array([[pt.cardinality, pt.cg_iterations] for pt in result.points])
    np.savetxt(out / "plot_cardinality.csv", card_rows.reshape(-1, 2), delimiter=",", fmt=data.FLOAT_FMT)
    np.savetxt(out / "plot_cg.csv", cg_rows.reshape(-1, 2), delimiter=",", fmt=data.FLOAT_FMT)
    if write_matrices:
        zero_tol = summary["config"]["zero_tol"]
        for idx, pt in enumerate(result.points):
            data.write_matrix(out / f"X_{idx:03d}.csv", pt.X)
            cutoff = zero_tol * np.max(np.abs(pt.X))
            ii, jj = np.nonzero(np.triu(np.abs(pt.X) > cutoff, 1))
            np.savetxt(
                out / f"edges_{idx:03d}.csv",
                np.column_stack([ii, jj]).reshape(-1, 2),
                delimiter=",",
                fmt="%d",
            )


def cmd_solve(args) -> int:
    sigma, meta = _load_instance(args)
    n = sigma.shape[0]
    t = args.gap_target / (2.0 * n * n)
    corrector_cfg = CorrectorConfig(sweep_fraction=args.sweep_fraction)
    cfg = PathConfig(
        points=args.points,
        rho_min_frac=args.rho_min_frac,
        t=t,
        gap_target=args.gap_target,
        mode=args.mode,
        zero_tol=args.zero_tol,
        corrector=corrector_cfg,
    )
    result = run_path(sigma, cfg)
    config_echo = {
        "points": args.points,
        "rho_min_frac": args.rho_min_frac,
        "gap_target": args.gap_target,
        "t": t,
        "mode": args.mode,
        "zero_tol": args.zero_tol,
        "sweep_fraction": args.sweep_fraction,
        "tol_residual": corrector_cfg.tol_residual
        if corrector_cfg.tol_residual is not None
        else 1e-6 * n,
        "seed": args.seed,
    }
    summary = data.build_summary(result, meta, config_echo)
    out = Path(args.output)
    _write_run_artifacts(out, result, summary, not args.no_matrices)
    print(
        f"solved {len(result.points)}/{args.points} points (n={n}, mode={args.mode}) -> {out}"
    )
    if result.truncated:
        print(f"path truncated at rho={result.failure.rho:.6g}: {result.failure.error}")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_online(args) -> int:
    state = data.load_json(args.state)
    sigma, U_star, rho, t = data.state_arrays(state)
    C = data.load_perturbation(args.perturbation)
    if C.shape != sigma.shape:
        raise ParseError(
            f"perturbation shape {C.shape} does not match state dimension {sigma.shape}"
        )
    problem = Problem(sigma=sigma, rho=rho)
    # Online updates are cheap; solve tight so --verify comparisons are
    # limited by the math, not the stopping rule.
    cc = CorrectorConfig(tol_residual=1e-9 * sigma.shape[0])
    tick = time.perf_counter()
    factor = run_online(problem, U_star, C, k=args.k, t=t, corrector_cfg=cc)
    wall = time.perf_counter() - tick

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    data.dump_json(out / "state.json", data.build_state(sigma + C, factor.matrix, rho, t))
    report = {
        "schema": "covpath.online/1",
        "k": args.k,
        "rho": rho,
        "t": t,
        "update_frobenius": float(np.linalg.norm(factor.matrix - U_star)),
    }
    if args.verify:
        scratch = solve_at(sigma + C, rho, t, cc)
        report["verify_frobenius_discrepancy"] = float(
            np.linalg.norm(factor.matrix - scratch.matrix)
        )
    data.dump_json(out / "online_report.json", report)
    print(f"online update done in {wall:.3f}s -> {out}")
    if args.verify:
        print(f"from-scratch discrepancy: {report['verify_frobenius_discrepancy']:.3e}")
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    lengths = [int(s) for s in args.lengths.split(",") if s]
    cells = []
    for n in sizes:
        spec = data.GeneratorSpec(n=n, density=args.density, seed=args.seed + n)
        sigma, _ = data.generate_problem(spec)
        for points in lengths:
            cfg = PathConfig(points=points, gap_target=args.gap_target)
            walls = []
            for _ in range(args.repeats):
                tick = time.perf_counter()
                result = run_path(sigma, cfg)
                walls.append(time.perf_counter() - tick)
                if result.truncated:
                    raise CovpathError(f"bench cell n={n}, points={points} truncated")
            cells.append(
                {
                    "n": n,
                    "points": points,
                    "density": args.density,
                    "wall_times": walls,
                    "median_wall_time": statistics.median(walls),
                }
            )
            print(
                f"n={n:>4d} points={points:>3d} median={statistics.median(walls):8.3f}s "
                f"min={min(walls):8.3f}s"
            )
    report = {
        "schema": data.BENCH_SCHEMA,
        "seed": args.seed,
        "repeats": args.repeats,
        "cells": cells,
    }
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    data.dump_json(out / "bench_report.json", report)
    print(f"report -> {out / 'bench_report.json'}")
    return EXIT_OK


def _verify_run_dir(run_dir: Path) -> list[str]:
    """Re-validate an emitted run; returns a list of failure messages."""
    failures = []
    summary = data.load_json(run_dir / "summary.json")
    if summary.get("schema") != data.SUMMARY_SCHEMA:
        return [f"unexpected summary schema {summary.get('schema')!r}"]
    points = summary["points"]
    rhos = [pt["rho"] for pt in points]
    if any(b >= a for a, b in zip(rhos, rhos[1:])):
        failures.append("points are not strictly descending in rho")
    tol = float(summary["config"]["tol_residual"])
    zero_tol = float(summary["config"]["zero_tol"])
    sigma = None
    state_path = run_dir / "state.json"
    if state_path.exists():
        sigma, _, _, _ = data.state_arrays(data.load_json(state_path))
    for idx, pt in enumerate(points):
        if pt["cardinality"] < 0 or pt["sweeps"] < 0 or pt["cg_iterations"] < 0:
            failures.append(f"point {idx}: negative counter")
        gap = pt["dual_obj"] - pt["primal_obj"]
        if gap < -1e-9:
            failures.append(f"point {idx}: weak duality violated (gap {gap:.3e})")
        if gap > pt["gap_bound"] + 10.0 * tol + 1e-9:
            failures.append(f"point {idx}: gap {gap:.3e} above bound {pt['gap_bound']:.3e}")
        x_path = run_dir / f"X_{idx:03d}.csv"
        if sigma is not None and x_path.exists():
            X = data.load_matrix(x_path)
            if cardinality(X, zero_tol) != pt["cardinality"]:
                failures.append(f"point {idx}: cardinality mismatch on recount")
            U = invert_pd(X)
            state = multipliers(Problem(sigma=sigma, rho=pt["rho"]), U, pt["t"])
            resid = float(np.linalg.norm(state.L - state.M - X))
            if resid > 2.0 * tol + 1e-9:
                failures.append(
                    f"point {idx}: recomputed residual {resid:.3e} above 2*tol={2*tol:.3e}"
                )
    return failures


def cmd_verify(args) -> int:
    failures = _verify_run_dir(Path(args.run_dir))
    if failures:
        for line in failures:
            print(f"FAIL: {line}")
        return EXIT_NUMERICAL
    print("verify: all checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covpath",
        description="Regularization paths for l1-penalized covariance selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="trace a full regularization path")
    solve.add_argument("--sigma", help="covariance matrix CSV")
    solve.add_argument("--samples", help="m x n sample matrix CSV")
    solve.add_argument("--gen", help="random instance, e.g. n=30,density=0.1,seed=1")
    solve.add_argument("--points", type=int, default=50)
    solve.add_argument("--rho-min-frac", type=float, default=0.01)
    solve.add_argument("--gap-target", type=float, default=1e-3)
    solve.add_argument("--mode", choices=["scaling", "predictor"], default="scaling")
    solve.add_argument("--zero-tol", type=float, default=1e-4)
    solve.add_argument("--sweep-fraction", type=float, default=1.0)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--output", default="covpath_run")
    solve.add_argument("--no-matrices", action="store_true", help="skip per-point X/edge files")
    solve.set_defaults(fn=cmd_solve)

    online = sub.add_parser("online", help="re-solve after a covariance perturbation")
    online.add_argument("--state", required=True, help="state.json from a previous run")
    online.add_argument("--perturbation", required=True, help="symmetric perturbation CSV")
    online.add_argument("--k", type=int, default=1, help="continuation steps in mu")
    online.add_argument("--verify", action="store_true", help="compare with a from-scratch solve")
    online.add_argument("--output", default="covpath_online")
    online.set_defaults(fn=cmd_online)

    bench = sub.add_parser("bench", help="wall-time benchmark on generated instances")
    bench.add_argument("--sizes", default="20,50,100,200")
    bench.add_argument("--lengths", default="10,50")
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--density", type=float, default=0.1)
    bench.add_argument("--gap-target", type=float, default=1e-3)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--output", default="covpath_bench")
    bench.set_defaults(fn=cmd_bench)

    verify = sub.add_parser("verify", help="re-validate an emitted run directory")
    verify.add_argument("run_dir")
    verify.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CovpathError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
