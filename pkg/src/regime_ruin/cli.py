"""Command-line front end.

``regime-ruin <command> CONFIG [options]`` with commands ``validate``,
``gamma``, ``upsilon``, ``tail``, ``verify`` and ``ruin``. Data goes to
standard output (or ``--output``), diagnostics to standard error.

Exit codes: 0 success, 1 invalid config or model, 2 verification failure,
3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import rng as rngmod
from .config import RunConfig, parse_config
from .errors import (
    ModelError,
    NotPowerTail,
    NotRuinCertain,
    ParseError,
    RegimeRuinError,
    ValidationError,
)
from .mgf import DEFAULT_TOL, brute_force_upsilon, expected_A_delta, find_gamma, upsilon
from .model import (
    RegimeClass,
    admissible_deltas,
    classify_regime,
    stationary_distribution,
    validate,
)
from .simulate import (
    Z99,
    estimate_tail,
    estimate_ruin_finite_horizon,
    sample_cycle_pairs,
    sample_Y_inf_many,
    simulate_ruin_certain_recursion,
)
from .tail import fixed_point_check, hill_sensitivity, tail_slope

EXIT_OK, EXIT_INVALID, EXIT_VERIFY, EXIT_RUNTIME = 0, 1, 2, 3

GAMMA_CSV = ("state", "gamma", "upsilon_at_gamma", "iterations", "epsilon_margin")
GAMMA_JSON = ("state", "gamma", "bracket_lo", "bracket_hi", "iterations", "epsilon_margin")
UPSILON_COLUMNS = ("q", "value", "finite")
TAIL_COLUMNS = ("u", "gbar", "ci_halfwidth", "psi_lower", "psi_upper")
RUIN_COLUMNS = ("state", "u", "horizon", "psi_hat", "ci_halfwidth", "n_paths")
VERIFY_COLUMNS = ("check", "passed", "statistic", "lower", "upper", "detail")

DEFAULT_Q_GRID = "0:2:21"
DEFAULT_U_GRID = "1:1000:31"
ORACLE_Q_POINTS = 8
ORACLE_REL_SLACK = 1e-12
MOMENT_QS = (0.25, 0.5, 1.0)
SLOPE_TOL = 0.15
HILL_TOL = 0.20
RUIN_CERTAIN_U = 1.0
RUIN_CERTAIN_LEVEL = 0.95


@dataclass(frozen=True)
class Report:
    """Rows in a fixed column order; ``meta`` (if any) wraps the rows in JSON."""

    columns: tuple
    rows: list
    meta: Optional[dict] = None
    json_columns: Optional[tuple] = None


def _num(x):
    """JSON-ready value with at most 12 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    return x


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def format_report(report: Report, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.columns)
        for row in report.rows:
            w.writerow([_cell(row.get(c, "")) for c in report.columns])
        return buf.getvalue()
    if fmt == "json":
        cols = report.json_columns or report.columns
        rows = [{c: _num(row.get(c)) for c in cols} for row in report.rows]
        body = rows if report.meta is None else {**_num(report.meta), "rows": rows}
        return json.dumps(body, indent=2, allow_nan=False) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(report: Report, fmt: str, path: Optional[str] = None) -> None:
    text = format_report(report, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def parse_grid(text: str, log: bool = False) -> np.ndarray:
    """``lo:hi:n`` to ``n`` points, linear or log spaced; ``n = 0`` is empty."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like lo:hi:n, got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 0:
        raise ValueError("grid size must be >= 0")
    if n == 0:
        return np.empty(0)
    if n > 1 and not hi > lo:
        raise ValueError(f"grid needs hi > lo, got {text!r}")
    if log:
        if not lo > 0.0:
            raise ValueError("log-spaced grid needs lo > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


# -- commands ---------------------------------------------------------------

def cmd_validate(cfg: RunConfig, args) -> tuple:
    spec = cfg.model
    d = validate(spec)
    regime = classify_regime(spec)
    meta = {
        "regime": str(regime),
        "K": d.K,
        "initial_state": spec.initial_state,
        "beta_star": d.beta_star,
        "beta_upper": d.beta_upper,
        "r_star": d.r_star,
    }
    pi = stationary_distribution(spec)
    rows = [{"state": j, "lambda": d.lambda_vec[j], "beta": d.beta[j], "r": d.r[j],
             "stationary": pi[j]} for j in range(d.K)]
    report = Report(("state", "lambda", "beta", "r", "stationary"), rows, meta)
    return report, EXIT_OK


def cmd_gamma(cfg: RunConfig, args) -> tuple:
    rows = []
    for i in range(cfg.model.K):
        g = find_gamma(cfg.model, i, args.tol)
        rows.append({"state": i, "gamma": g.gamma, "upsilon_at_gamma": float(g.upsilon_at_gamma),
                     "iterations": g.iterations, "epsilon_margin": g.epsilon_margin,
                     "bracket_lo": g.bracket[0], "bracket_hi": g.bracket[1]})
    return Report(GAMMA_CSV, rows, json_columns=GAMMA_JSON), EXIT_OK


def cmd_upsilon(cfg: RunConfig, args) -> tuple:
    i = cfg.model.initial_state if args.state is None else args.state
    rows = []
    for q in parse_grid(args.q_grid):
        v = upsilon(cfg.model, i, float(q))
        rows.append({"q": float(q), "value": float(v), "finite": v.is_finite})
    return Report(UPSILON_COLUMNS, rows), EXIT_OK


def cmd_tail(cfg: RunConfig, args) -> tuple:
    i = cfg.model.initial_state if args.state is None else args.state
    u = parse_grid(args.u_grid, log=True)
    rep = estimate_tail(cfg.model, i, u, cfg.sim)
    rows = [{"u": rep.u_grid[k], "gbar": rep.gbar_hat[k], "ci_halfwidth": rep.ci_halfwidth[k],
             "psi_lower": rep.psi_lower[k], "psi_upper": rep.psi_upper[k]}
            for k in range(len(rep.u_grid))]
    return Report(TAIL_COLUMNS, rows), EXIT_OK


def cmd_ruin(cfg: RunConfig, args) -> tuple:
    i = cfg.model.initial_state if args.state is None else args.state
    T = cfg.sim.horizon if args.horizon is None else args.horizon
    est = estimate_ruin_finite_horizon(cfg.model, i, args.u, cfg.sim, T)
    row = {"state": i, "u": args.u, "horizon": est.horizon, "psi_hat": est.psi_hat,
           "ci_halfwidth": est.ci_halfwidth, "n_paths": est.n_paths}
    return Report(RUIN_COLUMNS, [row]), EXIT_OK


def _check(name, passed, statistic, lower=math.nan, upper=math.nan, detail=""):
    return {"check": name, "passed": bool(passed), "statistic": float(statistic),
            "lower": float(lower), "upper": float(upper), "detail": detail}


def oracle_checks(spec, n_points: int = ORACLE_Q_POINTS) -> list:
    """Recursion against the truncated path sum on a q-grid inside ``[0, r_*)``."""
    d = validate(spec)
    out = []
    for i in range(d.K):
        worst, checked, ok = 0.0, 0, True
        for q in d.r_star * np.arange(n_points) / n_points:
            lower, bound = brute_force_upsilon(spec, i, float(q))
            if not math.isfinite(bound):
                continue
            value = upsilon(spec, i, float(q)).value
            gap = abs(value - lower)
            allowed = bound + ORACLE_REL_SLACK * value
            ok &= gap <= allowed
            worst = max(worst, gap - bound)
            checked += 1
        out.append(_check(f"recursion_vs_oracle[state={i}]", ok and checked > 0, worst,
                          upper=ORACLE_REL_SLACK, detail=f"{checked} q-points with finite tail bound"))
    return out


def moment_checks(spec, cfg) -> list:
    """Sample mean of ``M**q`` against ``upsilon(q)`` with a 99% normal interval."""
    d = validate(spec)
    i = spec.initial_state
    M, _ = sample_cycle_pairs(spec, i, cfg, tag=(rngmod.CYCLE_PAIR,))
    out = []
    for name, q in [(f"{q:g}", q) for q in MOMENT_QS] + [("beta_star", d.beta_star)]:
        # Var(M**q) = upsilon(2q) - upsilon(q)**2; the domain of upsilon can
        # end before r_*, so test finiteness directly
        if not 0.0 < q or not upsilon(spec, i, 2.0 * q).is_finite:
            out.append(_check(f"moment[q={name}]", True, math.nan,
                              detail="skipped: second moment of M**q is infinite"))
            continue
        x = M**q
        half = Z99 * float(np.std(x, ddof=1)) / math.sqrt(len(x))
        target = upsilon(spec, i, q).value
        mean = float(np.mean(x))
        out.append(_check(f"moment[q={name}]", abs(mean - target) <= half, mean,
                          target - half, target + half, f"upsilon={target:.12g}"))
    return out


def power_tail_battery(cfg: RunConfig, slope_tol: float, hill_tol: float) -> list:
    spec, sim = cfg.model, cfg.sim
    i = spec.initial_state
    checks = oracle_checks(spec)
    checks += moment_checks(spec, sim)

    ks = fixed_point_check(spec, i, sim)
    checks.append(_check("fixed_point_ks", ks.passed, ks.d_stat, upper=ks.threshold_1pct,
                         detail=f"n1={ks.n1} n2={ks.n2}"))

    gamma = find_gamma(spec, i).gamma
    y, _ = sample_Y_inf_many(spec, i, sim)
    fit = tail_slope(y)
    lo, hi = -gamma * (1.0 + slope_tol), -gamma * (1.0 - slope_tol)
    checks.append(_check("tail_slope", lo <= fit.slope <= hi, fit.slope, lo, hi,
                         f"gamma={gamma:.12g}"))
    hill = hill_sensitivity(y)["n/20"]
    lo, hi = gamma * (1.0 - hill_tol), gamma * (1.0 + hill_tol)
    checks.append(_check("hill", lo <= hill <= hi, hill, lo, hi, f"gamma={gamma:.12g}"))
    return checks


def ruin_certain_battery(cfg: RunConfig) -> list:
    spec = cfg.model
    i = spec.initial_state
    checks = []
    for delta in admissible_deltas(spec):
        v = float(expected_A_delta(spec, i, float(delta)))
        checks.append(_check(f"expected_A_delta[delta={delta:.6g}]", v < 1.0, v, upper=1.0))
    res = simulate_ruin_certain_recursion(spec, i, RUIN_CERTAIN_U, cfg.sim)
    checks.append(_check("ruin_frequency", res.fraction >= RUIN_CERTAIN_LEVEL, res.fraction,
                         lower=RUIN_CERTAIN_LEVEL,
                         detail=f"u={RUIN_CERTAIN_U:g} within {res.max_cycles} cycles"))
    return checks


def cmd_verify(cfg: RunConfig, args) -> tuple:
    regime = classify_regime(cfg.model)
    if regime is RegimeClass.POWER_TAIL:
        checks = power_tail_battery(cfg, args.slope_tol, args.hill_tol)
    elif regime is RegimeClass.RUIN_CERTAIN:
        checks = ruin_certain_battery(cfg)
    else:
        raise ModelError("verify needs a PowerTail or RuinCertain model; regime is Unsupported")
    passed = all(c["passed"] for c in checks)
    meta = {"regime": str(regime), "seed": cfg.sim.seed, "n_paths": cfg.sim.n_paths,
            "initial_state": cfg.model.initial_state, "all_passed": passed}
    return Report(VERIFY_COLUMNS, checks, meta), EXIT_OK if passed else EXIT_VERIFY


COMMANDS = {
    "validate": (cmd_validate, "json"),
    "gamma": (cmd_gamma, "csv"),
    "upsilon": (cmd_upsilon, "csv"),
    "tail": (cmd_tail, "csv"),
    "verify": (cmd_verify, "json"),
    "ruin": (cmd_ruin, "csv"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regime-ruin",
                                     description="Ruin tail exponent under Markov-modulated GBM returns.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="TOML model configuration")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("-o", "--output", default=None, help="output file (default: stdout)")
        p.add_argument("--seed", type=int, default=None, help="override [sim].seed")
        p.add_argument("--workers", type=int, default=None, help="override [sim].workers")
        p.add_argument("--n-paths", type=int, default=None, help="override [sim].n_paths")
        return p

    add("validate", "check the model and print derived parameters")
    add("gamma", "tail exponent for every initial state").add_argument(
        "--tol", type=float, default=DEFAULT_TOL)
    p = add("upsilon", "E[M^q] on a q-grid")
    p.add_argument("--q-grid", default=DEFAULT_Q_GRID, help="lo:hi:n, linear (default %(default)s)")
    p.add_argument("--state", type=int, default=None)
    p = add("tail", "empirical tail of Y_inf with the ruin envelope")
    p.add_argument("--u-grid", default=DEFAULT_U_GRID, help="lo:hi:n, log spaced (default %(default)s)")
    p.add_argument("--state", type=int, default=None)
    p = add("verify", "run the simulation checks against the analytic results")
    p.add_argument("--slope-tol", type=float, default=SLOPE_TOL)
    p.add_argument("--hill-tol", type=float, default=HILL_TOL)
    p = add("ruin", "finite-horizon ruin frequency")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--horizon", type=float, default=None, help="default: [sim].horizon")
    p.add_argument("--state", type=int, default=None)
    return parser


def _diag(msg: str) -> None:
    print(f"regime-ruin: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn, default_fmt = COMMANDS[args.command]
    try:
        cfg = parse_config(args.config)
    except ValidationError as exc:
        _diag(f"invalid model: {exc}")
        return EXIT_INVALID
    except ParseError as exc:
        _diag(f"config error: {exc}")
        return EXIT_INVALID

    overrides = {k: v for k, v in (("seed", args.seed), ("workers", args.workers),
                                   ("n_paths", args.n_paths)) if v is not None}
    try:
        cfg = replace(cfg, sim=replace(cfg.sim, **overrides))
        state = getattr(args, "state", None)
        if state is not None and not 0 <= state < cfg.model.K:
            raise ModelError(f"state {state} outside 0..{cfg.model.K - 1}")
    except (ValueError, RegimeRuinError) as exc:
        _diag(str(exc))
        return EXIT_INVALID

    try:
        report, code = fn(cfg, args)
        emit_report(report, args.format or default_fmt, args.output)
    except (ModelError, NotPowerTail, NotRuinCertain) as exc:
        _diag(f"{type(exc).__name__}: {exc}")
        return EXIT_INVALID
    except (RegimeRuinError, ValueError, ArithmeticError, OSError) as exc:
        _diag(f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    if code == EXIT_VERIFY:
        _diag("verification failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
