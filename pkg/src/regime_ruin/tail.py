"""Statistical checks on simulated ``Y_inf`` samples.

Power-law tail fits (log-log regression of the empirical survival function,
Hill estimator) and the two-sample Kolmogorov-Smirnov test of the
perpetuity fixed point ``Y = Q + M*Y'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as rngmod
from .errors import EmptyWindow, TooFewSamples, ZeroTail
from .mgf import DEFAULT_TOL, find_gamma
from .model import ModelSpec, validate
from .simulate import SimConfig, sample_cycle_pairs, sample_Y_inf_many

KS_COEFF_1PCT = 1.628
SLOPE_QUANTILES = (0.90, 0.995)
SLOPE_GRID_POINTS = 20
HILL_MIN_K = 10


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    r_squared: float
    u_window: tuple
    intercept: float = 0.0


@dataclass(frozen=True)
class KsResult:
    d_stat: float
    n1: int
    n2: int
    threshold_1pct: float

    @property
    def passed(self) -> bool:
        return self.d_stat <= self.threshold_1pct


def log_log_slope(u_grid, gbar_hat, window: Optional[tuple] = None) -> SlopeFit:
    """OLS fit of ``log gbar`` against ``log u`` over ``window`` (inclusive)."""
    u = np.asarray(u_grid, dtype=float)
    g = np.asarray(gbar_hat, dtype=float)
    if window is None:
        sel = np.ones(len(u), dtype=bool)
    else:
        sel = (u >= window[0]) & (u <= window[1])
    if sel.sum() < 4:
        raise EmptyWindow(f"need >= 4 grid points in the window, got {int(sel.sum())}")
    u, g = u[sel], g[sel]
    if np.any(g <= 0.0):
        raise ZeroTail("empirical tail is zero inside the fit window")
    x = np.log(u)
    y = np.log(g)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    ssr = float(np.sum(resid**2))
    sst = float(np.sum((y - ym) ** 2))
    n = len(x)
    stderr = math.sqrt(max(ssr, 0.0) / (n - 2) / sxx)
    r2 = 1.0 if sst == 0.0 else min(max(1.0 - ssr / sst, 0.0), 1.0)
    return SlopeFit(slope, stderr, r2, (float(u[0]), float(u[-1])), intercept)


def default_slope_window(samples) -> tuple:
    pos = np.asarray(samples, dtype=float)
    pos = pos[pos > 0.0]
    if len(pos) == 0:
        raise ZeroTail("no positive samples")
    lo, hi = np.quantile(pos, SLOPE_QUANTILES)
    return float(lo), float(hi)


def empirical_tail(samples, u_grid) -> np.ndarray:
    ys = np.sort(np.asarray(samples, dtype=float))
    u = np.asarray(u_grid, dtype=float)
    return (len(ys) - np.searchsorted(ys, u, side="right")) / len(ys)


def tail_slope(samples, window: Optional[tuple] = None,
               n_grid: int = SLOPE_GRID_POINTS) -> SlopeFit:
    """Log-log slope of the empirical survival function of ``samples``."""
    window = default_slope_window(samples) if window is None else window
    u = np.geomspace(window[0], window[1], n_grid)
    return log_log_slope(u, empirical_tail(samples, u), window)


def hill_estimator(samples, k: int) -> float:
    """Hill estimate of the tail index from the ``k`` largest positive samples."""
    x = np.asarray(samples, dtype=float)
    x = np.sort(x[x > 0.0])[::-1]
    if k < HILL_MIN_K or k >= len(x):
        raise TooFewSamples(f"need {HILL_MIN_K} <= k < {len(x)} positive samples, got k={k}")
    mean_log = float(np.mean(np.log(x[:k] / x[k])))
    if not mean_log > 0.0:
        raise TooFewSamples("top order statistics are all equal")
    return 1.0 / mean_log


def hill_sensitivity(samples, n: Optional[int] = None) -> dict:
    """Hill estimates at ``k = n/50, n/20, n/10``."""
    n = len(samples) if n is None else n
    out = {}
    for div in (50, 20, 10):
        try:
            out[f"n/{div}"] = hill_estimator(samples, n // div)
        except TooFewSamples:
            out[f"n/{div}"] = math.nan
    return out


def ks_two_sample(a, b) -> KsResult:
    """Two-sample Kolmogorov-Smirnov statistic with the asymptotic 1% critical value."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n1, n2 = len(a), len(b)
    both = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, both, side="right") / n1
    cdf_b = np.searchsorted(b, both, side="right") / n2
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    return KsResult(d, n1, n2, KS_COEFF_1PCT * math.sqrt((n1 + n2) / (n1 * n2)))


def fixed_point_check(spec: ModelSpec, i: int, cfg: SimConfig, n1: Optional[int] = None,
                      n2: Optional[int] = None) -> KsResult:
    """KS distance between ``Y_inf`` and ``Q' + M' * Y_inf''`` built from
    independent fresh draws."""
    n1 = cfg.n_paths if n1 is None else n1
    n2 = cfg.n_paths if n2 is None else n2
    a, _ = sample_Y_inf_many(spec, i, cfg, n1, tag=(rngmod.FIXED_POINT_Y, 0))
    M, Q = sample_cycle_pairs(spec, i, cfg, n2, tag=(rngmod.FIXED_POINT_PAIR,))
    y2, _ = sample_Y_inf_many(spec, i, cfg, n2, tag=(rngmod.FIXED_POINT_Y, 1))
    return ks_two_sample(a, Q + M * y2)


def gamma_cross_check(spec: ModelSpec, cfg: SimConfig, tol: float = DEFAULT_TOL,
                      samples: Optional[dict] = None) -> dict:
    """Analytic exponent, log-log slope and Hill estimate for every initial state.

    ``samples`` may map state -> ``Y_inf`` draws to skip the simulation.
    """
    d = validate(spec)
    rows = {}
    for i in range(d.K):
        g = find_gamma(spec, i, tol)
        y = samples[i] if samples and i in samples else sample_Y_inf_many(spec, i, cfg)[0]
        fit = tail_slope(y)
        hills = hill_sensitivity(y)
        rows[i] = {
            "gamma": g.gamma,
            "in_bracket": d.beta_star <= g.gamma < d.r_star,
            "slope": fit.slope,
            "slope_stderr": fit.stderr,
            "hill": hills["n/20"],
            "hill_sensitivity": hills,
        }
    report = {"states": rows, "beta_star": d.beta_star, "r_star": d.r_star}
    if d.K == 2:
        report["gammas_coincide"] = abs(rows[0]["gamma"] - rows[1]["gamma"]) <= 2 * tol
    return report
