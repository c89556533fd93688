"""Batch experiment runner.

Usage::

    python -m fraclab <scaling|energy|recovery|profile|keylemma> [--config cfg.json]
        [--out DIR] [--seed N] [--threads N] [--format csv|json]

Each command reads an optional JSON config (unknown keys are rejected),
writes ``<command>.csv`` (or ``.json``) plus ``<command>_summary.json`` to
``--out``, and exits with 0 on success, 2 on a config error, 3 when a
checked property is violated and 4 when some row failed numerically.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .energy import functional, verify_key_lemma
from .errors import GeometryError, OptimizationFailure, ResolutionError
from .gridfn import GridFunction, StepFunction, measure_condition, recovery_sequence
from .potentials import DoubleWell
from .profile import (ProfileOptions, analytic_lower_bound, analytic_upper_bound, limit_intercept,
                      m_half_extrapolate, m_s_extrapolate)
from .scaling import FracParams, lambda_continuous, regime

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_NUMERICAL = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configs


def _nonempty(name, seq):
    if not isinstance(seq, (list, tuple)) or len(seq) == 0:
        raise ConfigError(f"{name} must be a non-empty list")
    return list(seq)


@dataclass
class ScalingConfig:
    s: list = field(default_factory=lambda: [round(0.45 + 0.01 * k, 2) for k in range(11)])
    eps: list = field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-6])
    thresholds: list = field(default_factory=lambda: [0.1, 10.0])
    continuity_bound: float = 0.05

    def validate(self):
        _nonempty("s", self.s)
        _nonempty("eps", self.eps)
        if len(self.thresholds) != 2:
            raise ConfigError("thresholds must be [low, high]")


@dataclass
class EnergyConfig:
    s: list = field(default_factory=lambda: [0.5])
    eps: list = field(default_factory=lambda: [1e-3])
    jumps: list = field(default_factory=lambda: [0.5])
    N: int | None = None
    u_csv: str | None = None
    wells: list = field(default_factory=lambda: [-1.0, 1.0])
    min_cells_per_layer: int = 8
    ledger: str | None = None

    def validate(self):
        _nonempty("s", self.s)
        _nonempty("eps", self.eps)


RULES = ("half", "plus", "minus")


@dataclass
class RecoveryConfig:
    jumps: list = field(default_factory=lambda: [[0.5], [0.25, 0.75]])
    eps: list = field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-5])
    rules: list = field(default_factory=lambda: list(RULES))
    min_cells_per_layer: int = 8
    separation_tol: float = 0.5

    def validate(self):
        for j in _nonempty("jumps", self.jumps):
            _nonempty("jumps entry", j)
        _nonempty("eps", self.eps)
        for r in _nonempty("rules", self.rules):
            if r not in RULES:
                raise ConfigError(f"unknown rule {r!r}; choose from {RULES}")
        if len(self.eps) < 2:
            raise ConfigError("the intercept fit needs at least two eps values")


@dataclass
class ProfileConfig:
    s: list = field(default_factory=lambda: [0.55, 0.575, 0.6, 0.65])
    Ts: list = field(default_factory=lambda: [10.0, 20.0, 40.0, 80.0, 160.0, 320.0])
    half_Ts: list = field(default_factory=lambda: [10.0, 30.0, 100.0, 300.0])
    include_half: bool = True
    wells: list = field(default_factory=lambda: [-1.0, 1.0])
    max_cell_width: float = 0.02
    etas: list = field(default_factory=lambda: [0.05, 0.1, 0.2])
    slack: float = 0.02
    gtol: float = 1e-8
    maxiter: int = 5000
    half_model: str = "log+remainder"
    s_model: str = "power+remainder"
    limit_degree: int = 2

    def validate(self):
        _nonempty("s", self.s)
        _nonempty("Ts", self.Ts)
        _nonempty("half_Ts", self.half_Ts)
        _nonempty("etas", self.etas)
        if any(not 0.5 < s < 1 for s in self.s):
            raise ConfigError("profile s values must lie in (1/2, 1)")
        if self.limit_degree not in (1, 2):
            raise ConfigError("limit_degree must be 1 or 2")


@dataclass
class KeyLemmaConfig:
    cases: int = 200
    s: list = field(default_factory=lambda: [0.45, 0.55])
    eps: list = field(default_factory=lambda: [1e-2, 1e-3])
    eta: list = field(default_factory=lambda: [0.1, 0.2])
    theta: list = field(default_factory=lambda: [0.1, 0.25])
    N: int = 400
    max_attempts: int = 50
    alt_interval_exponent: bool = False

    def validate(self):
        for name in ("s", "eps", "eta", "theta"):
            _nonempty(name, getattr(self, name))
        if self.cases < 1 or self.N < 16:
            raise ConfigError("need cases >= 1 and N >= 16")


CONFIGS = {"scaling": ScalingConfig, "energy": EnergyConfig, "recovery": RecoveryConfig,
           "profile": ProfileConfig, "keylemma": KeyLemmaConfig}


def load_config(command: str, path: str | None):
    cls = CONFIGS[command]
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {unknown}")
    try:
        cfg = cls(**raw)
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


# ---------------------------------------------------------------------------
# results


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    violations: list = field(default_factory=list)


def _pool_map(fn, tasks, threads: int):
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _fit_intercept(x, y):
    X = np.column_stack([np.ones(len(x)), np.asarray(x, dtype=float)])
    coef, *_ = np.linalg.lstsq(X, np.asarray(y, dtype=float), rcond=None)
    return float(coef[0]), float(coef[1])


# ---------------------------------------------------------------------------
# commands


def run_scaling_sweep(cfg: ScalingConfig, seed: int = 0, threads: int = 1) -> Table:
    """Rows ``(s, eps, lambda, lambda |log eps|, regime value, regime class)``."""
    t = Table(["s", "eps", "lambda", "lambda_log_eps", "regimeValue", "regimeClass"])
    for eps in cfg.eps:
        prev = None
        for s in sorted(cfg.s):
            p = FracParams(float(s), float(eps))
            lam = lambda_continuous(p)
            rep = regime(p, tuple(cfg.thresholds))
            t.rows.append([p.s, p.eps, lam, lam * p.log_eps, rep.value, rep.classification.value])
            if prev is not None and abs(lam - prev[1]) >= cfg.continuity_bound:
                t.violations.append(f"lambda jumps by {abs(lam - prev[1]):.3g} between s={prev[0]} and s={s} "
                                    f"at eps={eps}")
            prev = (s, lam)
    t.summary = {"rows": len(t.rows), "continuity_bound": cfg.continuity_bound}
    return t


def run_energy(cfg: EnergyConfig, seed: int = 0, threads: int = 1) -> Table:
    t = Table(["s", "eps", "N", "potentialTerm", "seminormTerm", "total"])
    w = DoubleWell(tuple(cfg.wells))
    tasks = list(itertools.product(cfg.eps, cfg.s))

    def one(task):
        eps, s = task
        if cfg.u_csv is not None:
            u = GridFunction.from_csv(cfg.u_csv)
        else:
            r = recovery_sequence(StepFunction(np.asarray(cfg.jumps, dtype=float)), float(eps), cfg.N,
                                  cfg.min_cells_per_layer)
            u = r.with_values(w.from_zeta(r.values))
        e = functional(u, FracParams(float(s), float(eps)), w)
        return [float(s), float(eps), u.N, e.potentialTerm, e.seminormTerm, e.total], e.as_dict()

    out = []
    for task, res in zip(tasks, _pool_map(_guarded(one), tasks, threads)):
        if isinstance(res, str):
            t.failures.append(f"s={task[1]} eps={task[0]}: {res}")
            continue
        t.rows.append(res[0])
        out.append({"s": res[0][0], "eps": res[0][1], "N": res[0][2], **res[1]})
    t.summary = {"breakdowns": out}
    if cfg.ledger:
        _append_ledger(Path(cfg.ledger), t)
    return t


def _append_ledger(path: Path, t: Table):
    new = not path.exists()
    with path.open("a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(t.columns)
        writer.writerows(t.rows)


def _guarded(fn):
    def run(task):
        try:
            return fn(task)
        except (ResolutionError, GeometryError, OptimizationFailure, FloatingPointError) as exc:
            return f"{type(exc).__name__}: {exc}"
    return run


def s_of_rule(rule: str, eps: float) -> float:
    """Exponent schedule: ``1/2`` or ``1/2 +- |log eps|^{-2}``."""
    L = -math.log(eps)
    return {"half": 0.5, "plus": 0.5 + L**-2, "minus": 0.5 - L**-2}[rule]


def run_recovery_experiment(cfg: RecoveryConfig, seed: int = 0, threads: int = 1) -> Table:
    """Scaled energies of recovery profiles with the intercept of ``a + b/|log eps|``."""
    t = Table(["jumps", "rule", "eps", "s_eps", "N", "total", "total_per_jump"])
    w = DoubleWell()
    tasks = [(tuple(j), r, e) for j in cfg.jumps for r in cfg.rules for e in cfg.eps]

    def one(task):
        jumps, rule, eps = task
        s = s_of_rule(rule, eps)
        u = recovery_sequence(StepFunction(np.asarray(jumps, dtype=float)), eps,
                              min_cells_per_layer=cfg.min_cells_per_layer)
        total = functional(u, FracParams(s, eps), w).total
        return [" ".join(map(repr, jumps)), rule, eps, s, u.N, total, total / len(jumps)]

    fits = {}
    for task, res in zip(tasks, _pool_map(_guarded(one), tasks, threads)):
        if isinstance(res, str):
            t.failures.append(f"jumps={task[0]} rule={task[1]} eps={task[2]}: {res}")
            continue
        t.rows.append(res)
        fits.setdefault((res[0], res[1]), []).append((1.0 / -math.log(res[2]), res[5]))
    summary = {}
    for (jumps, rule), pts in fits.items():
        entry = summary.setdefault(jumps, {})
        if len(pts) >= 2:
            x, y = zip(*pts)
            a, b = _fit_intercept(x, y)
            entry[rule] = {"intercept": a, "slope": b, "points": len(pts),
                           "intercept_per_jump": a / len(jumps.split())}
            if len(pts) >= 4:
                # second order in 1/|log eps|: the rules differ from s = 1/2 at this order
                entry[rule]["quadratic_intercept"] = float(np.polynomial.polynomial.polyfit(x, y, 2)[0])
    for jumps, entry in summary.items():
        a = {r: v["intercept_per_jump"] for r, v in entry.items()}
        for r1, r2 in itertools.combinations(sorted(a), 2):
            if abs(a[r1] - a[r2]) > cfg.separation_tol:
                t.violations.append(f"jumps {jumps}: per-jump intercepts {r1}={a[r1]:.4f} and {r2}={a[r2]:.4f} "
                                    f"differ by more than {cfg.separation_tol}")
    t.summary = {"fits": summary}
    return t


def run_profile_sweep(cfg: ProfileConfig, seed: int = 0, threads: int = 1) -> Table:
    """Truncated profile values per ``(s, T)`` with extrapolated constants and bounds."""
    t = Table(["s", "T", "N", "value", "scaledValue", "gradientNorm", "iterations"])
    w = DoubleWell(tuple(cfg.wells))
    opts = ProfileOptions(gtol=cfg.gtol, maxiter=cfg.maxiter)
    n_per_T = 2.0 / cfg.max_cell_width
    standard = w.wells == (-1.0, 1.0)
    tasks = ([0.5] if cfg.include_half else []) + [float(s) for s in cfg.s]

    def one(s):
        if s == 0.5:
            return m_half_extrapolate(cfg.half_Ts, n_per_T, opts, w, model=cfg.half_model)
        return m_s_extrapolate(s, cfg.Ts, n_per_T, opts, w, model=cfg.s_model)

    per_s, series = {}, []
    for s, ex in zip(tasks, _pool_map(_guarded(one), tasks, threads)):
        if isinstance(ex, str):
            t.failures.append(f"s={s}: {ex}")
            continue
        for T, r in zip(ex.Ts, ex.results):
            scaled = r.value if s == 0.5 else (2 * s - 1) * r.value
            t.rows.append([s, T, r.minimizer.N, r.value, scaled, r.gradientNorm, r.iterations])
            if not r.converged:
                t.failures.append(f"s={s} T={T}: not converged ({r.message}), |g|={r.gradientNorm:.3e}")
        entry = {"m": ex.m, "fit_residual": ex.residual, "reliable": ex.reliable}
        if s != 0.5:
            entry["scaled_m"] = (2 * s - 1) * ex.m
            series.append([s, (2 * s - 1) * ex.m])
            if standard:
                lo = max(analytic_lower_bound(s, e, w) for e in cfg.etas)
                hi = analytic_upper_bound(s)
                ok = lo * (1 - cfg.slack) <= ex.m <= hi * (1 + cfg.slack)
                entry.update(lower=lo, upper=hi, bracket="OK" if ok else "VIOLATED")
                if not ok:
                    t.violations.append(f"s={s}: m={ex.m:.4f} outside [{lo:.4f}, {hi:.4f}] with slack {cfg.slack}")
        else:
            entry["expected"] = 2.0 * w.gap**2
        per_s[repr(s)] = entry
    t.summary = {"per_s": per_s, "series": {"x": "s", "y": "(2s-1) m_s", "points": series}}
    if len(series) > cfg.limit_degree:
        x, y = zip(*series)
        a, coef = limit_intercept(x, y, cfg.limit_degree)
        lin, _ = limit_intercept(x, y, 1)
        ramp = [(2 * s - 1) * analytic_upper_bound(s) for s in x] if standard else None
        t.summary["limit_fit"] = {
            "degree": cfg.limit_degree, "intercept": a, "coefficients": coef.tolist(),
            "linear_intercept": lin,
            # same fit on the ramp energy, whose limit is exactly 8
            "ramp_control": None if ramp is None else {
                "intercept": limit_intercept(x, ramp, cfg.limit_degree)[0],
                "linear_intercept": limit_intercept(x, ramp, 1)[0]},
        }
    return t


def random_admissible(rng: np.random.Generator, N: int, eta: float, theta: float, max_attempts: int = 50):
    """Random piecewise-linear ``u`` on ``(0, 1)`` and cell-aligned ``I`` meeting the measure condition.

    Returns ``None`` when ``max_attempts`` draws all fail.
    """
    h = 1.0 / N
    x = np.linspace(0.0, 1.0, N + 1)
    for _ in range(max_attempts):
        n_cells = int(rng.integers(N // 4, N + 1))
        start = int(rng.integers(0, N - n_cells + 1))
        lo, hi = start * h, (start + n_cells) * h
        k = int(rng.integers(1, 4))
        centers = np.sort(rng.uniform(lo, hi, size=k))
        widths = rng.uniform(h, 0.15 * (hi - lo), size=k)
        sign = rng.choice([-1.0, 1.0])
        v = np.full_like(x, sign)
        for c, wd in zip(centers, widths):
            sign = -sign
            ramp = np.clip((x - c) / wd, -1.0, 1.0)
            v = np.where(x >= c - wd, np.where(x <= c + wd, sign * ramp, sign), v)
        v = v + rng.uniform(0.0, 0.5 * eta) * np.sin(2 * np.pi * rng.integers(1, 8) * x + rng.uniform(0, 6.3))
        u = GridFunction(0.0, 1.0, v)
        if measure_condition(u, (lo, hi), eta, theta):
            return u, (lo, hi)
    return None


def run_keylemma_audit(cfg: KeyLemmaConfig, seed: int = 0, threads: int = 1) -> Table:
    """Check the interval lower bound on seeded random admissible functions."""
    t = Table(["case", "s", "eps", "eta", "theta", "lo", "hi", "lhs", "rhs", "margin", "holds"])
    combos = list(itertools.product(cfg.s, cfg.eps, cfg.eta, cfg.theta))
    w = DoubleWell()

    def one(case):
        s, eps, eta, theta = combos[case % len(combos)]
        rng = np.random.default_rng([seed, case])
        drawn = random_admissible(rng, cfg.N, eta, theta, cfg.max_attempts)
        if drawn is None:
            return None
        u, I = drawn
        chk = verify_key_lemma(u, I, FracParams(s, eps), eta, theta, w, cfg.alt_interval_exponent)
        return [case, s, eps, eta, theta, I[0], I[1], chk.lhs, chk.rhs, chk.margin, chk.holds]

    skipped = 0
    for case, row in zip(range(cfg.cases), _pool_map(one, range(cfg.cases), threads)):
        if row is None:
            skipped += 1
            t.failures.append(f"case {case}: no admissible function in {cfg.max_attempts} draws (skipped)")
            continue
        t.rows.append(row)
        if not row[-1]:
            t.violations.append(f"case {case}: lhs={row[7]:.6g} < rhs={row[8]:.6g}")
    t.summary = {"cases": len(t.rows), "skipped": skipped, "violation_count": len(t.violations),
                 "min_margin": min((r[9] for r in t.rows), default=None)}
    return t


RUNNERS = {"scaling": run_scaling_sweep, "energy": run_energy, "recovery": run_recovery_experiment,
           "profile": run_profile_sweep, "keylemma": run_keylemma_audit}


# ---------------------------------------------------------------------------
# output


def config_hash(command: str, cfg) -> str:
    blob = json.dumps({"command": command, **dataclasses.asdict(cfg)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def write_outputs(command: str, cfg, t: Table, out: Path, seed: int, fmt: str) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    meta = {"tool": "fraclab", "version": __version__, "command": command,
            "config_sha256": config_hash(command, cfg), "seed": seed}
    paths = []
    if fmt == "csv":
        path = out / f"{command}.csv"
        with path.open("w", newline="") as fh:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(t.columns)
            writer.writerows([[_cell(v) for v in row] for row in t.rows])
    else:
        path = out / f"{command}.json"
        doc = {"meta": meta, "columns": t.columns, "rows": t.rows}
        path.write_text(json.dumps(doc, indent=1, default=_jsonable) + "\n")
    paths.append(path)
    summary = {"meta": meta, "config": dataclasses.asdict(cfg), **t.summary,
               "failures": t.failures, "violations": t.violations}
    spath = out / f"{command}_summary.json"
    spath.write_text(json.dumps(summary, indent=1, default=_jsonable) + "\n")
    paths.append(spath)
    return paths


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraclab", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=sorted(RUNNERS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="random seed (recorded in outputs)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweep rows")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("threads must be positive")
        cfg = load_config(args.command, args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        t = RUNNERS[args.command](cfg, seed=args.seed, threads=args.threads)
    except (ValueError, OptimizationFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        paths = write_outputs(args.command, cfg, t, Path(args.out), args.seed, args.format)
    except OSError as exc:
        print(f"cannot write outputs to {args.out}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in paths:
        print(p)
    for msg in t.failures:
        print(f"failure: {msg}", file=sys.stderr)
    for msg in t.violations:
        print(f"violation: {msg}", file=sys.stderr)
    if t.violations:
        return EXIT_VIOLATION
    if t.failures:
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
