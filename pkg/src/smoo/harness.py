"""Experiment configuration, seed-replicated execution and reporting.

Config files are TOML with dotted keys (``problem.kind = "quadratic"``);
unknown keys are rejected. Derived constants (caps, ``G``, step sizes) are
always recomputed and cannot be set from a file, except explicit dual caps.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import burn_in_pgd, estimate_linear_constraints, scalarize
from .core import ConfigurationError, SmooError, union_confidence
from .oracle import (GaussianClass, ProblemSpec, make_known_optimum_quadratic,
                     make_np_classification, make_np_from_data, make_portfolio,
                     make_stochastic_lp)
from .pd_solver import configure, solve, solve_exact

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SOLVERS = ("pd", "pd_exact", "scalarize", "burn_in")
PROBLEMS = ("quadratic", "lp", "portfolio", "np", "np_data")
#: Monte Carlo sample size for evaluating expectations without a closed form.
MC_EVAL_SAMPLES = 1_000_000

# key -> default; None means "required for some kinds / optional"
SCHEMA = {
    "problem.kind": "quadratic",
    "problem.d": 5,
    "problem.m": 2,
    "problem.seed": 0,
    "problem.R": 1.0,
    "problem.objective_noise": 0.1,
    "problem.constraint_noise": 0.1,
    "problem.constraint_scale": 3.0,
    "problem.c_mean": None,
    "problem.A_mean": None,
    "problem.b_mean": None,
    "problem.noise_scale": 0.0,
    "problem.mu": None,
    "problem.Sigma": None,
    "problem.gamma_return": None,
    "problem.pos_mean": None,
    "problem.pos_cov": None,
    "problem.neg_mean": None,
    "problem.neg_cov": None,
    "problem.gamma": None,
    "problem.tau": None,
    "problem.data": None,
    "solver.name": "pd",
    "solver.theta": 1.0,
    "solver.delta": 0.01,
    "solver.dual_caps": None,
    "solver.weights": None,
    "solver.burn_fraction": 0.3,
    "solver.relax": None,
    "experiment.T_grid": [1000],
    "experiment.n_seeds": 1,
    "experiment.seed": 0,
    "experiment.threads": 1,
    "experiment.timing": True,
    "experiment.traces": True,
    "output.dir": "results",
}

CSV_FIXED = ("solver", "problem", "T", "seed", "subopt")
CSV_TAIL = ("bound_subopt", "bound_viol", "wall_ms")


def flatten(tree: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated flat experiment configuration."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = dict(SCHEMA)
        unknown = sorted(set(self.values) - set(SCHEMA))
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        merged.update(self.values)
        object.__setattr__(self, "values", merged)
        if merged["problem.kind"] not in PROBLEMS:
            raise ConfigurationError(f"problem.kind must be one of {PROBLEMS}")
        if merged["solver.name"] not in SOLVERS:
            raise ConfigurationError(f"solver.name must be one of {SOLVERS}")
        grid = [int(t) for t in merged["experiment.T_grid"]]
        if not grid or any(t < 1 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("experiment.T_grid must be strictly increasing positive ints")
        merged["experiment.T_grid"] = grid
        if int(merged["experiment.n_seeds"]) < 1:
            raise ConfigurationError("experiment.n_seeds must be >= 1")

    def __getitem__(self, key):
        return self.values[key]

    def updated(self, updates: dict) -> "ExperimentConfig":
        """Copy with some dotted keys overridden."""
        vals = dict(self.values)
        vals.update(updates)
        return ExperimentConfig(vals)

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        return cls(flatten(tomllib.loads(text)))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_toml(Path(path).read_text())


def build_problem(cfg: ExperimentConfig) -> ProblemSpec:
    v = cfg.values
    kind = v["problem.kind"]
    R = float(v["problem.R"])
    try:
        if kind == "quadratic":
            return make_known_optimum_quadratic(
                int(v["problem.d"]), int(v["problem.m"]), int(v["problem.seed"]), R=R,
                constraint_scale=float(v["problem.constraint_scale"]),
                objective_noise=float(v["problem.objective_noise"]),
                constraint_noise=float(v["problem.constraint_noise"]))
        if kind == "lp":
            return make_stochastic_lp(_need(v, "problem.c_mean"), _need(v, "problem.A_mean"),
                                      _need(v, "problem.b_mean"), float(v["problem.noise_scale"]),
                                      R=R)
        if kind == "portfolio":
            return make_portfolio(_need(v, "problem.mu"), _need(v, "problem.Sigma"),
                                  float(_need(v, "problem.gamma_return")), R=R)
        tau = None if v["problem.tau"] is None else float(v["problem.tau"])
        if kind == "np":
            pos = GaussianClass(_need(v, "problem.pos_mean"), _need(v, "problem.pos_cov"))
            neg = GaussianClass(_need(v, "problem.neg_mean"), _need(v, "problem.neg_cov"))
            return make_np_classification(pos, neg, float(_need(v, "problem.gamma")), R=R,
                                          tau=tau)
        return make_np_from_data(_need(v, "problem.data"), float(_need(v, "problem.gamma")),
                                 R=R, tau=tau)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad {kind} parameters: {exc}") from exc


def _need(v, key):
    if v[key] is None:
        raise ConfigurationError(f"{key} is required for problem.kind = {v['problem.kind']}")
    return v[key]


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def run_seeds(base_seed: int, n_seeds: int) -> list:
    return [int(base_seed) + k for k in range(int(n_seeds))]


def evaluate(problem: ProblemSpec, w, seed: int) -> np.ndarray:
    """``fbar_0..fbar_m`` at ``w``: analytic when available, else a fresh Monte Carlo stream.

    The Monte Carlo stream uses seed ``[seed, 1]``; training always uses
    ``[seed, 0]``, so evaluation never reuses training draws.
    """
    if problem.expected is not None:
        return np.asarray(problem.expected(w), dtype=float)
    return problem.oracle([seed, 1]).sample_values(w, MC_EVAL_SAMPLES).mean(axis=0)


def _reference_bounds(problem, cfg, T):
    """Reference guarantee bounds for a run; NaN when caps cannot be derived."""
    theta, delta = float(cfg["solver.theta"]), float(cfg["solver.delta"])
    try:
        scfg = configure(problem, T, theta, delta, dual_caps=cfg["solver.dual_caps"])
    except SmooError:
        return math.nan, math.nan, None
    mu = scfg.mu
    return mu / math.sqrt(T), mu / (theta * math.sqrt(T)), scfg


def run_one(cfg: ExperimentConfig, T: int, seed: int, problem: Optional[ProblemSpec] = None):
    """Execute one ``(T, seed)`` cell; returns ``(row, trace)``.

    Errors are captured in ``row["error"]`` rather than raised.
    """
    problem = build_problem(cfg) if problem is None else problem
    solver = cfg["solver.name"]
    row = {"solver": solver, "problem": problem.name, "T": int(T), "seed": int(seed),
           "subopt": math.nan, "viol": [math.nan] * problem.m, "bound_subopt": math.nan,
           "bound_viol": math.nan, "wall_ms": 0.0, "error": None, "extra": {}}
    trace = None
    try:
        bound_subopt, bound_viol, scfg = _reference_bounds(problem, cfg, T)
        oracle = problem.oracle([seed, 0])
        if solver in ("pd", "pd_exact"):
            if scfg is None:
                scfg = configure(problem, T, float(cfg["solver.theta"]),
                                 float(cfg["solver.delta"]), dual_caps=cfg["solver.dual_caps"])
            if solver == "pd":
                trace = solve(oracle, scfg)
            else:
                trace = solve_exact(oracle, scfg)
                caps_sum = float(np.sum(scfg.caps))
                bound_subopt = (1.0 + caps_sum) * trace.extra["mu_prime"] / math.sqrt(T)
                bound_viol = 0.0
        elif solver == "scalarize":
            weights = cfg["solver.weights"] or [1.0] * (problem.m + 1)
            trace = scalarize(oracle, weights, T)
        else:
            trace = burn_in_pgd(oracle, float(cfg["solver.burn_fraction"]), T,
                                relax=cfg["solver.relax"])
            row["extra"]["coef_error"] = trace.extra.get("coef_error")
            row["extra"]["burn_fraction"] = float(cfg["solver.burn_fraction"])
            cv = trace.extra.get("cumulative_violation")
            row["extra"]["cumulative_violation"] = None if cv is None else cv.tolist()
        row["bound_subopt"], row["bound_viol"] = bound_subopt, bound_viol
        vals = evaluate(problem, trace.averaged, seed)
        if problem.known_optimum is not None:
            row["subopt"] = float(vals[0] - problem.known_optimum.value)
        row["viol"] = (vals[1:] - problem.gamma).tolist()
        if cfg["experiment.timing"]:
            row["wall_ms"] = 1000.0 * trace.wall_time
        if trace.error:
            row["error"] = trace.error
    except SmooError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row, trace


def fit_rate(points):
    """Least-squares fit of ``log(value)`` against ``log(T)``.

    Returns ``(slope, intercept, rms_residual)``; values are clamped below at 1e-12.
    """
    pts = list(points)
    if len(pts) < 3:
        raise ConfigurationError("rate fitting needs at least 3 points")
    x = np.log([float(t) for t, _ in pts])
    y = np.log(np.maximum([float(v) for _, v in pts], 1e-12))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2)))


@dataclass
class ExperimentReport:
    config: dict
    m: int
    rows: list
    aggregate: dict
    partial: bool

    def csv_header(self) -> list:
        return list(CSV_FIXED) + [f"viol_{i + 1}" for i in range(self.m)] + list(CSV_TAIL)

    def csv_rows(self) -> list:
        out = []
        for r in self.rows:
            vals = [r["solver"], r["problem"], _fmt(r["T"]), _fmt(r["seed"]), _fmt(r["subopt"])]
            vals += [_fmt(x) for x in r["viol"]]
            vals += [_fmt(r["bound_subopt"]), _fmt(r["bound_viol"]), _fmt(r["wall_ms"])]
            out.append(vals)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.csv_header())
        writer.writerows(self.csv_rows())
        return buf.getvalue()

    def to_json(self) -> str:
        cfg = {k: v for k, v in self.config.items()}
        payload = {"config": cfg, "partial": self.partial, "aggregate": self.aggregate,
                   "cells": [{k: r[k] for k in ("T", "seed", "error", "extra")} for r in self.rows]}
        return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def read_csv(text: str) -> list:
    """Parse a run-level CSV back into dicts with float columns."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        parsed = {}
        for k, v in rec.items():
            if k in ("solver", "problem"):
                parsed[k] = v
            elif k in ("T", "seed"):
                parsed[k] = int(v)
            else:
                parsed[k] = float(v)
        rows.append(parsed)
    return rows


def aggregate(rows: list, m: int, delta: float) -> dict:
    """Per-T medians, guarantee-failure frequencies and fitted slopes."""
    conf = union_confidence(m, delta)
    fail_budget = (2 * m + 1) * delta
    per_T = {}
    Ts = sorted({r["T"] for r in rows})
    for T in Ts:
        cell = [r for r in rows if r["T"] == T and r["error"] is None]
        n = len(cell)
        if n == 0:
            per_T[str(T)] = {"n": 0}
            continue
        sub = np.array([r["subopt"] for r in cell])
        maxv = np.array([max(r["viol"]) if r["viol"] else -math.inf for r in cell])
        bs = np.array([r["bound_subopt"] for r in cell])
        bv = np.array([r["bound_viol"] for r in cell])
        fail_sub = float(np.mean(sub > bs)) if np.all(np.isfinite(bs)) else math.nan
        fail_viol = float(np.mean(maxv > bv)) if np.all(np.isfinite(bv)) else math.nan
        slack = 2.0 * math.sqrt(max(fail_budget * (1 - fail_budget), 0.0) / n)
        q = min(max(conf, 0.0), 1.0)
        per_T[str(T)] = {
            "n": n,
            "median_subopt": float(np.median(sub)),
            "median_abs_subopt": float(np.median(np.abs(sub))),
            "quantile_subopt": float(np.quantile(sub, q)),
            "median_max_violation": float(np.median(maxv)),
            "quantile_max_violation": float(np.quantile(maxv, q)),
            "bound_subopt": float(np.median(bs)),
            "bound_viol": float(np.median(bv)),
            "fail_freq_subopt": fail_sub,
            "fail_freq_viol": fail_viol,
            "fail_budget": fail_budget,
            "binomial_slack": slack,
            "median_wall_ms": float(np.median([r["wall_ms"] for r in cell])),
        }
        coefs = [r["extra"].get("coef_error") for r in cell if r["extra"].get("coef_error") is not None]
        if coefs:
            per_T[str(T)]["median_coef_error"] = float(np.median(coefs))
        cums = [sum(r["extra"]["cumulative_violation"]) for r in cell
                if r["extra"].get("cumulative_violation") is not None]
        if cums:
            per_T[str(T)]["median_cumulative_violation"] = float(np.median(cums))
    out = {"confidence": conf, "per_T": per_T}
    good = [(T, per_T[str(T)]) for T in Ts if per_T[str(T)].get("n")]
    if len(good) >= 3:
        if all(math.isfinite(a["median_abs_subopt"]) for _, a in good):
            out["slope_subopt"] = fit_rate([(T, a["median_abs_subopt"]) for T, a in good])
        out["slope_violation"] = fit_rate(
            [(T, max(a["median_max_violation"], 0.0)) for T, a in good])
        # burn-in diagnostics: estimation error decay q (against bT) and regret growth
        if all("median_coef_error" in a for _, a in good):
            b = float(rows[0]["extra"].get("burn_fraction", 1.0))
            out["slope_coef_error"] = fit_rate(
                [(math.ceil(b * T), a["median_coef_error"]) for T, a in good])
        if all("median_cumulative_violation" in a for _, a in good):
            out["slope_cumulative_violation"] = fit_rate(
                [(T, a["median_cumulative_violation"]) for T, a in good])
    return out


def _cell(args):
    cfg_values, T, seed = args
    cfg = ExperimentConfig(cfg_values)
    return run_one(cfg, T, seed, _cached_problem(cfg))


_PROBLEM_CACHE = {}


def _cached_problem(cfg):
    key = json.dumps({k: v for k, v in cfg.values.items() if k.startswith("problem.")},
                     sort_keys=True, default=str)
    if key not in _PROBLEM_CACHE:
        _PROBLEM_CACHE[key] = build_problem(cfg)
    return _PROBLEM_CACHE[key]


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: Optional[int] = None,
                   write_traces: Optional[bool] = None) -> ExperimentReport:
    """Run every ``(T, seed)`` cell and aggregate; writes outputs when ``out_dir`` is set."""
    problem = build_problem(cfg)
    seeds = run_seeds(cfg["experiment.seed"], cfg["experiment.n_seeds"])
    cells = [(T, s) for T in cfg["experiment.T_grid"] for s in seeds]
    threads = int(cfg["experiment.threads"] if threads is None else threads)
    raw_values = {k: v for k, v in cfg.values.items()}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_cell, [(raw_values, T, s) for T, s in cells]))
    else:
        results = [run_one(cfg, T, s, problem) for T, s in cells]
    rows = [r for r, _ in results]
    report = ExperimentReport(config=dict(cfg.values), m=problem.m, rows=rows,
                              aggregate=aggregate(rows, problem.m, float(cfg["solver.delta"])),
                              partial=any(r["error"] for r in rows))
    if out_dir is not None:
        write_traces = cfg["experiment.traces"] if write_traces is None else write_traces
        write_outputs(report, [t for _, t in results] if write_traces else None, out_dir)
    return report


def trace_to_dict(trace) -> dict:
    return {
        "solver": trace.solver, "T": trace.T, "iterations": trace.iterations,
        "averaged": trace.averaged.tolist(), "eval": None if trace.eval is None else trace.eval.tolist(),
        "log_every": trace.log_every, "error": trace.error,
        "log": [{"t": e.t, "w": e.w.tolist(), "lam": e.lam.tolist(), "losses": e.losses.tolist()}
                for e in trace.log],
        "config": trace.config,
    }


def write_outputs(report: ExperimentReport, traces, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "runs.csv").write_text(report.to_csv())
    (out / "report.json").write_text(report.to_json())
    if traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for row, trace in zip(report.rows, traces):
            if trace is None:
                continue
            name = f"{row['solver']}_T{row['T']}_seed{row['seed']}.json"
            (tdir / name).write_text(json.dumps(trace_to_dict(trace), default=_json_default))


def estimation_error_decay(problem: ProblemSpec, sizes, n_seeds: int, base_seed: int = 0):
    """Median sup-norm error of averaged constraint coefficients for each sample size.

    Returns ``(points, (slope, intercept, residual))`` with ``points`` a list of
    ``(n, median_error)``.
    """
    if problem.linear_expected is None:
        raise ConfigurationError("coefficient error needs known linear expectations")
    A_true, b_true = problem.linear_expected
    points = []
    for n in sizes:
        errs = []
        for s in run_seeds(base_seed, n_seeds):
            est = estimate_linear_constraints(problem.oracle([s, 2]), int(n))
            errs.append(max(np.max(np.abs(est.A - A_true)), np.max(np.abs(est.b - b_true))))
        points.append((int(n), float(np.median(errs))))
    return points, fit_rate(points)


def format_summary(row: dict, report_bounds: bool = True) -> str:
    lines = [f"solver      {row['solver']}", f"problem     {row['problem']}",
             f"T           {row['T']}", f"seed        {row['seed']}",
             f"subopt      {_fmt(row['subopt'])}"]
    for i, v in enumerate(row["viol"]):
        lines.append(f"viol_{i + 1:<6d}{_fmt(v)}")
    if report_bounds:
        lines += [f"bound_subopt {_fmt(row['bound_subopt'])}",
                  f"bound_viol  {_fmt(row['bound_viol'])}"]
    lines.append(f"wall_ms     {_fmt(row['wall_ms'])}")
    if row["error"]:
        lines.append(f"error       {row['error']}")
    return "\n".join(lines)

