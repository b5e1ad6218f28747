"""Command line entry point: ``smoo solve|bench|project|validate-oracle``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .core import SmooError
from .harness import (SOLVERS, ExperimentConfig, ExperimentReport, aggregate, build_problem,
                      format_summary, run_experiment, run_one, write_outputs)
from .projection import project_ball, project_box, project_halfspaces, project_simplex
from .validation import validate_oracle


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["experiment.seed"] = args.seed
    if getattr(args, "solver", None) is not None:
        updates["solver.name"] = args.solver
    if getattr(args, "threads", None) is not None:
        updates["experiment.threads"] = args.threads
    if getattr(args, "out", None) is not None:
        updates["output.dir"] = args.out
    return cfg.updated(updates) if updates else cfg


def cmd_solve(args) -> int:
    cfg = _load(args)
    T = cfg["experiment.T_grid"][-1]
    seed = int(cfg["experiment.seed"])
    row, trace = run_one(cfg, T, seed)
    print(format_summary(row))
    if args.out:
        rep = ExperimentReport(dict(cfg.values), len(row["viol"]), [row],
                               aggregate([row], len(row["viol"]), float(cfg["solver.delta"])),
                               partial=bool(row["error"]))
        write_outputs(rep, [trace] if cfg["experiment.traces"] else None, args.out)
    return 1 if row["error"] else 0


def cmd_bench(args) -> int:
    cfg = _load(args)
    report = run_experiment(cfg, out_dir=cfg["output.dir"])
    for T, a in report.aggregate["per_T"].items():
        if not a.get("n"):
            print(f"T={T}: no completed runs")
            continue
        print(f"T={T}: n={a['n']} median subopt {a['median_subopt']:.4g} "
              f"(bound {a['bound_subopt']:.4g}), median max violation "
              f"{a['median_max_violation']:.4g} (bound {a['bound_viol']:.4g}), "
              f"failure freq {a['fail_freq_subopt']:.3g}/{a['fail_freq_viol']:.3g}")
    for key in ("slope_subopt", "slope_violation"):
        if key in report.aggregate:
            slope, _, resid = report.aggregate[key]
            print(f"{key}: {slope:.3f} (rms residual {resid:.3g})")
    print(f"confidence 1-(2m+1)delta = {report.aggregate['confidence']:.4g}")
    print(f"wrote {cfg['output.dir']}/runs.csv and report.json")
    if report.partial:
        print("warning: some runs failed; see report.json", file=sys.stderr)
        return 1
    return 0


def _parse_vector(text):
    return np.array([float(x) for x in text.replace(",", " ").split()])


def cmd_project(args) -> int:
    lines = [ln for ln in sys.stdin.read().splitlines() if ln.strip()]
    if not lines:
        print("expected a vector on stdin", file=sys.stderr)
        return 2
    w = _parse_vector(lines[0])
    if args.operator == "ball":
        z = project_ball(w, args.radius)
    elif args.operator == "box":
        z = project_box(w, args.lo, args.hi)
    elif args.operator == "simplex":
        z = project_simplex(w)
    else:
        # each further line: a_1 ... a_d b
        cons = []
        for ln in lines[1:]:
            row = _parse_vector(ln)
            cons.append((row[:-1], row[-1]))
        z = project_halfspaces(w, cons, args.radius)
    print(" ".join(format(float(x), ".17g") for x in z))
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    problem = build_problem(cfg)
    results = validate_oracle(problem, seed=int(cfg["experiment.seed"]))
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="TOML experiment config")
        p.add_argument("--seed", type=int, help="base seed (overrides config)")
        if out:
            p.add_argument("--out", help="output directory")
        p.add_argument("--solver", choices=SOLVERS)
        p.add_argument("--threads", type=int)

    p = sub.add_parser("solve", help="single run, prints a summary")
    common(p)
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("bench", help="full experiment from a config file")
    common(p)
    p.set_defaults(func=cmd_bench)
    p = sub.add_parser("project", help="apply a projector to a vector read from stdin")
    p.add_argument("operator", choices=("ball", "box", "simplex", "halfspaces"))
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=1.0)
    p.set_defaults(func=cmd_project)
    p = sub.add_parser("validate-oracle", help="unbiasedness and gradient checks")
    common(p, out=False)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SmooError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
