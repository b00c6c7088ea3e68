"""``compres`` command-line front end.

Exit codes: 0 success, 1 configuration error, 2 non-convergence (or a
candidate that fails verification), 3 operator without the geometry a
verification needs.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config, example1, instances, linop
from .composite import (
    SumResolventProblem,
    mcx_resolvent,
    solve_algorithm1,
    solve_algorithm2,
    solve_algorithm3,
)
from .exceptions import ConvergenceError, DimensionError, UnsupportedOperatorError
from .lure import find_equilibrium
from .monotone import ScaledOp
from .oracle import inclusion_residual

EXIT_OK, EXIT_CONFIG, EXIT_NOCONV, EXIT_UNSUPPORTED = 0, 1, 2, 3

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")

def write_csv(path: Path, header, rows) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)

def _xheader(n):
    return [f"x{i}" for i in range(1, n + 1)]

def _load(args) -> tuple[dict, Path]:
    if args.config is None:
        raise config.ConfigError("--config is required for this subcommand")
    cfg = config.load_json(args.config)
    return cfg, Path(args.config).resolve().parent

def _opts(cfg, args, **extra):
    return config.options(cfg.get("options"), tol=args.tol, max_iter=args.max_iter, **extra)

def _certify(problem, x) -> float:
    try:
        return inclusion_residual(problem, x)
    except UnsupportedOperatorError:
        return math.nan

def _write_solve(args, report, problem, want_history):
    out = Path(args.out)
    header = _xheader(len(report.x)) + ["iterations", "converged", "certificate", "inclusion_residual"]
    row = list(report.x) + [
        report.iterations, report.converged, report.condition_certificate, _certify(problem, report.x)
    ]
    write_csv(out / "result.csv", header, [row])
    if want_history:
        write_csv(out / "history.csv", ["k", "step_norm"], enumerate(report.step_history, start=1))
    print(",".join(_fmt(v) for v in row))
    return EXIT_OK if report.converged else EXIT_NOCONV

def cmd_resolve(args) -> int:
    cfg, base = _load(args)
    problem = config.problem(cfg.get("problem", cfg), base)
    if isinstance(problem, SumResolventProblem):
        raise config.ConfigError("problem has M1/M2; use resolve-sum")
    want_history = bool(cfg.get("history", False)) or args.history
    opts = _opts(cfg, args, record_history=want_history)
    algo = cfg.get("algorithm", 2)
    if algo not in (1, 2):
        raise config.ConfigError(f"algorithm must be 1 or 2, got {algo!r}")
    solver = solve_algorithm1 if algo == 1 else solve_algorithm2
    return _write_solve(args, solver(problem, opts), problem, want_history)

def cmd_resolve_sum(args) -> int:
    cfg, base = _load(args)
    problem = config.problem(cfg.get("problem", cfg), base)
    if not isinstance(problem, SumResolventProblem):
        raise config.ConfigError("resolve-sum needs M1 and M2")
    want_history = bool(cfg.get("history", False)) or args.history
    opts = _opts(cfg, args, record_history=want_history)
    return _write_solve(args, solve_algorithm3(problem, opts), problem, want_history)

def cmd_compare_mcx(args) -> int:
    cfg, base = _load(args)
    problem = config.problem(cfg.get("problem", cfg), base)
    if isinstance(problem, SumResolventProblem):
        raise config.ConfigError("compare-mcx needs a single composite operator M")
    mus = cfg.get("mu_values")
    if not isinstance(mus, list) or not mus:
        raise config.ConfigError("compare-mcx needs a nonempty 'mu_values' list")
    opts = _opts(cfg, args)
    spec = linop.estimate_spectrum(problem.C) if not problem.C.is_zero() else None
    scaled = ScaledOp(problem.M, problem.lam)
    rows = []
    all_ok = True
    for mu in mus:
        mu = mu if mu == "auto" else float(mu)
        ours = solve_algorithm2(problem, replace(opts, mu=mu), spectrum=spec)
        # Same numeric mu as the single parameter of the lam = 1 scheme on lam*M.
        mcx = mcx_resolvent(problem.C, scaled, mu, problem.y, opts, spectrum=spec)
        all_ok &= ours.converged
        for name, r in (("algorithm2", ours), ("mcx", mcx)):
            rows.append(
                [name, r.parameter, r.condition_certificate, r.iterations, r.converged,
                 _certify(problem, r.x), *r.x]
            )
    header = ["method", "mu", "certificate", "iterations", "converged", "inclusion_residual"]
    write_csv(Path(args.out) / "compare_mcx.csv", header + _xheader(problem.C.cols), rows)
    for row in rows:
        print(",".join(_fmt(v) for v in row))
    return EXIT_OK if all_ok else EXIT_NOCONV

def cmd_verify(args) -> int:
    cfg, base = _load(args)
    problem = config.problem(cfg.get("problem", cfg), base)
    if "candidate" not in cfg:
        raise config.ConfigError("verify needs a 'candidate' vector")
    x = config.vector(cfg["candidate"], base)
    if x.shape != (problem.C.cols,):
        raise config.ConfigError(f"candidate must have length {problem.C.cols}")
    try:
        res = inclusion_residual(problem, x)
    except UnsupportedOperatorError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    print(_fmt(res))
    write_csv(Path(args.out) / "verify.csv", ["inclusion_residual", "threshold"], [[res, args.threshold]])
    return EXIT_OK if res <= args.threshold else EXIT_NOCONV

def _bench_instances(cfg, base, rng):
    if "instances" in cfg:
        return [config.problem(d, base) for d in cfg["instances"]]
    spec = cfg.get("random")
    if not isinstance(spec, dict):
        raise config.ConfigError("bench needs 'instances' or a 'random' block")
    try:
        count, m, n = int(spec["count"]), int(spec["rows"]), int(spec["cols"])
    except KeyError as exc:
        raise config.ConfigError(f"random block is missing {exc}") from None
    kind = spec.get("operator", "l1")
    rank = spec.get("rank")
    return [instances.random_problem(rng, m, n, kind, rank=rank) for _ in range(count)]

def cmd_bench(args) -> int:
    cfg, base = _load(args)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    rng = np.random.default_rng(seed)
    problems = _bench_instances(cfg, base, rng)
    grid = cfg.get("grid", [{"mu": "auto"}])
    if not isinstance(grid, list) or not grid:
        raise config.ConfigError("'grid' must be a nonempty list of option overrides")
    out = Path(args.out)
    rows = []
    all_ok = True
    print(f"seed={seed}")
    for i, p in enumerate(problems):
        spec = linop.estimate_spectrum(p.C) if not p.C.is_zero() else None
        for j, override in enumerate(grid):
            opts = config.options({**(cfg.get("options") or {}), **override},
                                  tol=args.tol, max_iter=args.max_iter, record_history=True)
            r = solve_algorithm2(p, opts, spectrum=spec)
            all_ok &= r.converged
            write_csv(out / f"history_{i}_{j}.csv", ["k", "step_norm"], enumerate(r.step_history, start=1))
            rows.append([i, j, seed, r.parameter, r.iterations, r.converged,
                         r.contraction_estimate, r.predicted_q])
    header = ["instance", "setting", "seed", "mu", "iterations", "converged",
              "contraction_estimate", "predicted_q"]
    write_csv(out / "bench_summary.csv", header, rows)
    for row in rows:
        print(",".join(_fmt(v) for v in row))
    return EXIT_OK if all_ok else EXIT_NOCONV

def cmd_lure_eq(args) -> int:
    cfg, base = _load(args)
    sys_ = config.lure_system(cfg.get("system", cfg), base)
    step = cfg.get("step", "auto")
    if step == "auto":
        PA = sys_.P @ sys_.A
        m = sys_.strong_monotonicity
        if not m > 0:
            raise config.ConfigError("step 'auto' needs P A with positive definite symmetric part")
        step = m / float(np.linalg.norm(PA, 2)) ** 2
    tol = args.tol if args.tol is not None else float(cfg.get("tol", 1e-10))
    max_outer = args.max_iter if args.max_iter is not None else int(cfg.get("max_outer", 10_000))
    inner = config.options(cfg["inner_options"]) if "inner_options" in cfg else None
    try:
        rep = find_equilibrium(sys_, float(step), tol=tol, max_outer=max_outer, inner_opts=inner)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    header = _xheader(sys_.n) + ["outer_iterations", "converged", "equilibrium_residual",
                                 "strong_monotonicity"]
    row = [*rep.x_star, rep.outer_iterations, rep.converged, rep.equilibrium_residual,
           rep.strong_monotonicity]
    write_csv(Path(args.out) / "equilibrium.csv", header, [row])
    print(",".join(_fmt(v) for v in row))
    return EXIT_OK if rep.converged else EXIT_NOCONV

def cmd_repro_example1(args) -> int:
    rows = example1.run()
    text = example1.report(rows)
    write_text(Path(args.out) / "example1.csv", text)
    sys.stdout.write(text)
    return EXIT_OK if example1.stable_rows_ok(rows) else EXIT_NOCONV

COMMANDS = {
    "resolve": (cmd_resolve, "resolvent of C^T M C (Algorithm 1 or 2)"),
    "resolve-sum": (cmd_resolve_sum, "resolvent of M1 + C^T M2 C"),
    "compare-mcx": (cmd_compare_mcx, "single-parameter scheme vs the two-parameter one"),
    "verify": (cmd_verify, "inclusion residual of a candidate resolvent value"),
    "bench": (cmd_bench, "convergence histories and rate estimates"),
    "lure-eq": (cmd_lure_eq, "equilibrium of a set-valued Lur'e system"),
    "repro-example1": (cmd_repro_example1, "tables of the embedded 5x5 l1 example"),
}

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="JSON configuration file")
    common.add_argument("--out", type=str, default=".", help="output directory (default: .)")
    common.add_argument("--tol", type=float, help="override the stopping tolerance")
    common.add_argument("--max-iter", type=int, dest="max_iter", help="override the iteration cap")
    common.add_argument("--seed", type=int, help="seed for random instance generation")
    parser = argparse.ArgumentParser(prog="compres", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_)
        if name in ("resolve", "resolve-sum"):
            sp.add_argument("--history", action="store_true", help="also write history.csv")
        if name == "verify":
            sp.add_argument("--threshold", type=float, default=1e-6)
    return parser

def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except UnsupportedOperatorError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (config.ConfigError, DimensionError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
