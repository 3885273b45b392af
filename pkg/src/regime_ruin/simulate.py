"""Monte Carlo for the discounted-loss perpetuity and ruin probabilities.

The discounted net loss is ``Y_t = -int_0^t exp(-V_s) dP_s`` and ruin from
capital ``u`` happens when ``Y`` first reaches ``u``. Between returns of
the regime chain to its initial state the process renews, which gives the
perpetuity ``Y_inf = Q_1 + M_1 Q_2 + M_1 M_2 Q_3 + ...``.

``V`` is sampled exactly on a grid; only the premium integral
``int exp(-V) ds`` carries trapezoid error. Claim times are grid nodes.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels, rng as rngmod
from .errors import BadHorizon, BadStep, DegenerateTail, NotPowerTail, NotRuinCertain
from .model import ModelSpec, RegimeClass, classify_regime, validate
from .rng import RngStream, as_generator

Z99 = 2.5758293035489004
WILSON_MIN_COUNT = 30


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 10_000
    quad_step: Optional[float] = None
    max_cycles: int = 10_000
    product_cutoff: float = 1e-6
    horizon: float = 100.0
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 1 or self.max_cycles < 1 or self.workers < 1:
            raise ValueError("n_paths, max_cycles and workers must be >= 1")
        if self.quad_step is not None and not self.quad_step > 0.0:
            raise BadStep(f"quad_step must be > 0, got {self.quad_step}")
        if not 0.0 < self.product_cutoff <= 1.0:
            raise ValueError("product_cutoff must lie in (0, 1]")
        if not self.horizon > 0.0:
            raise BadHorizon(f"horizon must be > 0, got {self.horizon}")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    def step(self, spec: ModelSpec) -> float:
        """Quadrature step; defaults to 1% of the shortest mean holding time."""
        if self.quad_step is not None:
            return self.quad_step
        return 0.01 / float(validate(spec).lambda_vec.max())


@dataclass(frozen=True)
class Excursion:
    segments: tuple  # ((state, duration), ...)
    claims: tuple  # ((time, signed size), ...)
    total_duration: float

    @property
    def states(self):
        return [s for s, _ in self.segments]

    @property
    def durations(self):
        return [d for _, d in self.segments]


@dataclass(frozen=True)
class CycleSample:
    M: float
    Q: float
    quadrature_step: float


@dataclass(frozen=True)
class YInfSample:
    value: float
    n_cycles: int
    cap_hit: bool

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class TailReport:
    u_grid: np.ndarray
    gbar_hat: np.ndarray
    ci_halfwidth: np.ndarray
    gbar0_by_state: np.ndarray
    gbar0_ci: np.ndarray
    psi_lower: np.ndarray
    psi_upper: np.ndarray
    psi_upper_ci: np.ndarray
    n_samples: int
    cap_hits: int
    runtime_seconds: float = field(compare=False)


@dataclass(frozen=True)
class RuinEstimate:
    psi_hat: float
    ci_halfwidth: float
    n_paths: int
    horizon: float


@dataclass(frozen=True)
class RecursionResult:
    fraction: float
    hit_cycle: np.ndarray  # first cycle with negative reserve, 0 if none
    max_cycles: int

    def fraction_within(self, n: int) -> float:
        """Hitting fraction if the run had been stopped after ``n`` cycles."""
        h = self.hit_cycle
        return float(np.mean((h > 0) & (h <= n)))


def proportion_ci(count: int, n: int) -> float:
    """99% half-width for a binomial proportion.

    Normal approximation, switching to the (conservative side of the)
    Wilson interval when successes or failures number fewer than 30.
    """
    if n == 0:
        return math.nan
    p = count / n
    if min(count, n - count) >= WILSON_MIN_COUNT:
        return Z99 * math.sqrt(p * (1.0 - p) / n)
    z2 = Z99 * Z99
    centre = (p + z2 / (2 * n)) / (1 + z2 / n)
    half = Z99 * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n)
    return max(centre + half - p, p - (centre - half))


def _require_step(h: float):
    if not h > 0.0:
        raise BadStep(f"quadrature step must be > 0, got {h}")


# ---------------------------------------------------------------- path runner

def _run_chunk(backend_name, spec, fn_name, args, seed, tag, start, stop):
    mod = kernels.BACKENDS[backend_name]
    m = mod.prepare(kernels.KernelModel.from_spec(spec))
    fn = getattr(mod, fn_name)
    out = []
    for p in range(start, stop):
        gen = RngStream(seed, p, tag).generator()
        out.append(fn(gen, m, *args))
    return out


def run_paths(spec: ModelSpec, fn_name: str, args: tuple, n: int, seed: int, tag: tuple,
              workers: int = 1) -> list:
    """Evaluate kernel ``fn_name`` on paths ``0..n-1``, path ``p`` on stream
    ``(seed, tag, p)``. Results come back in path order, so the output does
    not depend on ``workers``."""
    backend = kernels.backend().NAME
    if workers <= 1 or n < 2 * workers:
        return _run_chunk(backend, spec, fn_name, args, seed, tag, 0, n)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, backend, spec, fn_name, args, seed, tag, a, b)
                   for a, b in zip(bounds[:-1], bounds[1:])]
        out = []
        for fut in futures:
            out.extend(fut.result())
    return out


# ---------------------------------------------------------------- operations

def sample_excursion(spec: ModelSpec, i: int, rng) -> Excursion:
    mod = kernels.backend()
    m = mod.prepare(kernels.KernelModel.from_spec(spec))
    states, durs, total, times, sizes = mod.excursion(as_generator(rng), m, i)
    return Excursion(tuple(zip(states, durs)), tuple(zip(times, sizes)), total)


def sample_cycle(spec: ModelSpec, excursion: Excursion, rng, h: float) -> CycleSample:
    M, Qs = sample_cycle_refined(spec, excursion, rng, h, 0)
    return CycleSample(M, Qs[0], h)


def sample_cycle_refined(spec: ModelSpec, excursion: Excursion, rng, h: float, levels: int):
    """``(M, [Q at h, h/2, ..., h/2**levels])`` from one Gaussian path.

    The grids are nested, so the estimates are coupled: their differences
    isolate the quadrature error of a single path.
    """
    _require_step(h)
    mod = kernels.backend()
    m = mod.prepare(kernels.KernelModel.from_spec(spec))
    times = [t for t, _ in excursion.claims]
    sizes = [x for _, x in excursion.claims]
    V, Qs, _ = mod.cycle(as_generator(rng), m, excursion.states, excursion.durations,
                         times, sizes, h, levels)
    return math.exp(-V), Qs


def sample_cycle_pairs(spec: ModelSpec, i: int, cfg: SimConfig, n: Optional[int] = None,
                       tag: tuple = (rngmod.CYCLE_PAIR,), h: Optional[float] = None):
    """``n`` independent ``(M, Q)`` pairs as two arrays."""
    n = cfg.n_paths if n is None else n
    h = cfg.step(spec) if h is None else h
    _require_step(h)
    out = run_paths(spec, "cycle_pair", (i, h), n, cfg.seed, (*tag, i), cfg.workers)
    arr = np.array(out, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def quadrature_ladder(spec: ModelSpec, i: int, cfg: SimConfig, h: float, levels: int,
                      n: Optional[int] = None, tag: tuple = (rngmod.QUADRATURE,)):
    """``n`` fresh cycles, each integrated at steps ``h, h/2, ..., h/2**levels``
    on nested grids of one Gaussian path.

    Returns ``(M, Q)`` with ``Q`` of shape ``(n, levels + 1)``.
    """
    _require_step(h)
    if levels < 0:
        raise ValueError("levels must be >= 0")
    n = cfg.n_paths if n is None else n
    out = run_paths(spec, "cycle_ladder", (i, h, levels), n, cfg.seed, (*tag, i), cfg.workers)
    arr = np.array(out, dtype=float).reshape(n, levels + 2)
    return arr[:, 0], arr[:, 1:]


def sample_Y_inf(spec: ModelSpec, i: int, rng, cfg: SimConfig) -> YInfSample:
    if classify_regime(spec) is not RegimeClass.POWER_TAIL:
        raise NotPowerTail("Y_inf exists only when every beta_j > 0")
    mod = kernels.backend()
    m = mod.prepare(kernels.KernelModel.from_spec(spec))
    y, n, cap = mod.y_inf(as_generator(rng), m, i, cfg.step(spec), cfg.product_cutoff,
                          cfg.max_cycles)
    return YInfSample(y, n, cap)


def sample_Y_inf_many(spec: ModelSpec, i: int, cfg: SimConfig, n: Optional[int] = None,
                      tag: tuple = (rngmod.Y_INF,)):
    """``n`` draws of ``Y_inf`` from initial state ``i``; returns
    ``(values, cap_hits)``."""
    if classify_regime(spec) is not RegimeClass.POWER_TAIL:
        raise NotPowerTail("Y_inf exists only when every beta_j > 0")
    n = cfg.n_paths if n is None else n
    out = run_paths(spec, "y_inf", (i, cfg.step(spec), cfg.product_cutoff, cfg.max_cycles),
                    n, cfg.seed, (*tag, i), cfg.workers)
    values = np.array([o[0] for o in out], dtype=float)
    caps = int(sum(1 for o in out if o[2]))
    return values, caps


def estimate_tail(spec: ModelSpec, i: int, u_grid, cfg: SimConfig,
                  samples: Optional[np.ndarray] = None) -> TailReport:
    """Empirical tail of ``Y_inf`` on ``u_grid`` with the two-sided ruin envelope
    ``G_i(u) <= Psi_i(u) <= G_i(u) / min_j G_j(0)``."""
    t0 = time.perf_counter()
    u = np.asarray(u_grid, dtype=float)
    if u.ndim != 1 or np.any(u <= 0.0) or np.any(np.diff(u) <= 0.0):
        raise ValueError("u_grid must be increasing and positive")
    caps = 0
    if samples is None:
        samples, caps = sample_Y_inf_many(spec, i, cfg)
    n = len(samples)
    if len(u) and not np.any(samples > u[0]):
        raise DegenerateTail(f"no sample exceeds u = {u[0]}; grid too high for n = {n}")
    ys = np.sort(samples)
    counts = n - np.searchsorted(ys, u, side="right")
    gbar = counts / n
    ci = np.array([proportion_ci(int(k), n) for k in counts])

    K = validate(spec).K
    g0 = np.empty(K)
    g0_ci = np.empty(K)
    for j in range(K):
        if j == i:
            yj = samples
        else:
            yj, cj = sample_Y_inf_many(spec, j, cfg, tag=(rngmod.GBAR0,))
            caps += cj
        k0 = int(np.sum(yj > 0.0))
        g0[j] = k0 / len(yj)
        g0_ci[j] = proportion_ci(k0, len(yj))
    gmin = g0.min()
    if gmin > 0.0:
        upper = np.clip(gbar / gmin, 0.0, 1.0)
        upper_ci = ci / gmin
    else:
        upper = np.ones_like(gbar)
        upper_ci = np.zeros_like(gbar)
    return TailReport(u, gbar, ci, g0, g0_ci, gbar.copy(), upper, upper_ci, n, caps,
                      time.perf_counter() - t0)


def estimate_ruin_finite_horizon(spec: ModelSpec, i: int, u: float, cfg: SimConfig,
                                 horizon: Optional[float] = None,
                                 n: Optional[int] = None) -> RuinEstimate:
    """Fraction of paths whose grid-sampled ``Y`` reaches ``u`` by ``horizon``.

    Biased low: crossings strictly between grid nodes are missed.
    """
    T = cfg.horizon if horizon is None else horizon
    if not T > 0.0:
        raise BadHorizon(f"horizon must be > 0, got {T}")
    if not u > 0.0:
        raise ValueError("u must be > 0")
    validate(spec)
    n = cfg.n_paths if n is None else n
    out = run_paths(spec, "ruin_horizon", (i, u, T, cfg.step(spec)), n, cfg.seed,
                    (rngmod.HORIZON, i), cfg.workers)
    k = sum(1 for ruined, _ in out if ruined)
    return RuinEstimate(k / n, proportion_ci(k, n), n, T)


def simulate_ruin_certain_recursion(spec: ModelSpec, i: int, u: float, cfg: SimConfig,
                                    n: Optional[int] = None,
                                    require_regime: bool = True) -> RecursionResult:
    """Reserve at the return times, ``X_n = A_n X_{n-1} + B_n`` with
    ``A_n = 1/M_n`` and ``B_n = -Q_n/M_n``; counts paths that go negative."""
    if require_regime and classify_regime(spec) is not RegimeClass.RUIN_CERTAIN:
        raise NotRuinCertain("model is not in the certain-ruin regime")
    validate(spec)
    n = cfg.n_paths if n is None else n
    out = run_paths(spec, "ruin_recursion", (i, u, cfg.step(spec), cfg.max_cycles), n,
                    cfg.seed, (rngmod.RECURSION, i), cfg.workers)
    hits = np.array(out, dtype=np.int64)
    return RecursionResult(float(np.mean(hits > 0)), hits, cfg.max_cycles)


def sample_wiener_extremum(lam: float, sigma: float, beta: float, side: str, n: int, rng,
                           n_steps: int = 1) -> np.ndarray:
    """Running extremum of ``X_s = W_s + sigma*beta*s/2`` over ``s <= tau``,
    ``tau ~ Exp(lam)``.

    ``X`` is sampled with exact Gaussian increments on ``n_steps`` equal
    steps; within each step the bridge extremum is drawn from its exact
    conditional law, so the result is exact for any ``n_steps``.
    """
    gen = as_generator(rng)
    mu = sigma * beta / 2.0
    tau = gen.standard_exponential(n) / lam
    dt = tau / n_steps
    x = np.zeros(n)
    ext = np.zeros(n)
    for _ in range(n_steps):
        step = mu * dt + np.sqrt(dt) * gen.standard_normal(n)
        y = x + step
        e = np.sqrt(step * step - 2.0 * dt * np.log1p(-gen.random(n)))
        if side == "inf":
            ext = np.minimum(ext, 0.5 * (x + y - e))
        elif side == "sup":
            ext = np.maximum(ext, 0.5 * (x + y + e))
        else:
            raise ValueError(f"side must be 'inf' or 'sup', got {side!r}")
        x = y
    return ext
