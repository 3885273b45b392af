"""Excursion moment generating function and the ruin tail exponent.

Over one excursion of the regime chain away from its initial state ``i``,
the log-price gains ``V``. ``excursion_mgf(spec, i, s) = E[exp(s*V)]`` is
computed by a memoized recursion over the set of states still allowed
before the path returns to ``i``. ``upsilon(q) = E[M**q]`` with
``M = exp(-V)``, and its root ``upsilon(gamma) = 1`` on ``(beta_*, r_*)``
is the tail exponent of the ruin probability.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadDelta, Divergent, NoBracket, NotPowerTail
from .extreal import INF, ExtReal
from .model import (
    DerivedParams,
    ModelSpec,
    RegimeClass,
    classify_regime,
    critical_exponent,
    validate,
)

__all__ = [
    "ExtReal",
    "GammaResult",
    "laplace_factor",
    "f",
    "excursion_mgf",
    "ExcursionRecursion",
    "upsilon",
    "find_gamma",
    "expected_A_delta",
    "brute_force_upsilon",
    "enumerate_excursions",
    "path_sum",
    "wiener_extremum_laplace",
]

DEFAULT_TOL = 1e-10
MAX_BISECTIONS = 200
EPS_MARGIN_LEVELS = 20


def laplace_factor(lam: float, sigma: float, beta: float, s: float) -> ExtReal:
    """``E[exp(s*Z_tau)]`` for ``Z_t = sigma*W_t + sigma**2*beta*t/2`` and
    ``tau ~ Exp(lam)`` independent of ``W``."""
    den = lam - 0.5 * sigma * sigma * s * (s + beta)
    if den > 0.0:
        return ExtReal(lam / den)
    return INF


def f(derived: DerivedParams, j: int, q: float) -> ExtReal:
    """Laplace factor of one regime-``j`` holding period at ``-q``."""
    return laplace_factor(derived.lambda_vec[j], derived.sigma[j], derived.beta[j], -q)


class ExcursionRecursion:
    """Subset recursion for path sums over first-return excursions.

    ``W(A, j, k)`` is the total weight of embedded-chain paths from ``j`` to
    ``k`` whose intermediate states (zero or more) all lie in ``A``; a path
    weighs the product of ``h[x, y] = P[x, y] * factor[x]`` over its steps.
    Conditioning on the first intermediate state ``m`` and on the number of
    loops ``m -> m`` inside ``A - {m}``::

        W(A, j, k) = h[j, k] + sum_m h[j, m] * geo(W(A-{m}, m, m)) * W(A-{m}, m, k)

    The excursion sum from ``i`` is ``W(S - {i}, i, i)``.
    """

    def __init__(self, P: np.ndarray, factors):
        K = len(P)
        self.K = K
        self.h = [[ExtReal(P[x, y]) * factors[x] for y in range(K)] for x in range(K)]
        self.memo: dict = {}

    @property
    def n_cells(self) -> int:
        return len(self.memo)

    def W(self, A: int, j: int, k: int) -> ExtReal:
        key = (A, j, k)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        total = self.h[j][k]
        rest = A
        while rest:
            low = rest & -rest
            m = low.bit_length() - 1
            rest ^= low
            hjm = self.h[j][m]
            if hjm.value == 0.0:
                continue
            sub = A & ~low
            total = total + hjm * self.W(sub, m, m).geo() * self.W(sub, m, k)
        self.memo[key] = total
        return total

    def excursion(self, i: int) -> ExtReal:
        full = (1 << self.K) - 1
        return self.W(full & ~(1 << i), i, i)


def _factors(derived: DerivedParams, s: float):
    return [laplace_factor(derived.lambda_vec[j], derived.sigma[j], derived.beta[j], s)
            for j in range(derived.K)]


def excursion_mgf(spec: ModelSpec, i: int, s: float) -> ExtReal:
    """``E[exp(s * V)]`` where ``V`` is the log-price gain over one excursion from ``i``."""
    d = validate(spec)
    return ExcursionRecursion(d.embedded, _factors(d, s)).excursion(i)


def upsilon(spec: ModelSpec, i: int, q: float) -> ExtReal:
    """``E[M**q]`` with ``M = exp(-V)`` the discount factor of one excursion."""
    if q < 0.0:
        raise ValueError(f"upsilon needs q >= 0, got {q}")
    return excursion_mgf(spec, i, -q)


@dataclass(frozen=True)
class GammaResult:
    state: int
    gamma: float
    bracket: tuple
    upsilon_at_gamma: ExtReal
    iterations: int
    epsilon_margin: float


def find_gamma(spec: ModelSpec, i: int, tol: float = DEFAULT_TOL) -> GammaResult:
    """Root of ``upsilon(q) = 1`` on ``[beta_*, r_*]`` by bisection.

    Bisection tolerates ``upsilon = inf`` inside the bracket; infinite values
    count as ``>= 1``.
    """
    if classify_regime(spec) is not RegimeClass.POWER_TAIL:
        raise NotPowerTail("gamma is defined only when every beta_j > 0")
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    d = validate(spec)
    lo, hi = d.beta_star, d.r_star
    u_lo = upsilon(spec, i, lo)
    if u_lo.value > 1.0 + tol:
        raise NoBracket(f"upsilon(beta_*) = {u_lo.value!r} > 1")
    it = 0
    if abs(u_lo.value - 1.0) <= tol:
        gamma, hi = lo, lo
    else:
        while hi - lo > tol and it < MAX_BISECTIONS:
            mid = 0.5 * (lo + hi)
            if upsilon(spec, i, mid) >= 1.0:
                hi = mid
            else:
                lo = mid
            it += 1
        gamma = 0.5 * (lo + hi)

    margin = 0.0
    for k in range(1, EPS_MARGIN_LEVELS + 1):
        eps = 2.0**-k * (d.r_star - gamma)
        if eps > 0.0 and upsilon(spec, i, gamma + eps).is_finite:
            margin = eps
            break
    return GammaResult(i, gamma, (lo, hi), upsilon(spec, i, gamma), it, margin)


def expected_A_delta(spec: ModelSpec, i: int, delta: float) -> ExtReal:
    """``E[exp(delta * V)]`` over one excursion: the mean growth factor of the
    reserve between returns, raised to ``delta``."""
    d = validate(spec)
    hi = min(abs(d.beta_upper), 1.0)
    if not 0.0 < delta < hi:
        raise BadDelta(f"delta must lie in (0, {hi}), got {delta}")
    return excursion_mgf(spec, i, delta)


def brute_force_upsilon(spec: ModelSpec, i: int, q: float, max_len: int = 200):
    """Excursion path sum truncated at ``max_len`` jumps, plus a bound on the rest.

    Paths are grouped by length: with ``G[x, y] = P[x, y] * f_x(q)`` and ``T``
    the states other than ``i``, the weight of all length-``n`` excursions is
    ``G[i, T] @ G[T, T]**(n-2) @ G[T, i]``. The remainder is bounded with the
    max-row-sum norm of a power of ``G[T, T]``; if no power up to 64 is a
    contraction the bound is ``inf``.

    Returns ``(lower, tail_bound)``.
    """
    d = validate(spec)
    fq = [f(d, j, q) for j in range(d.K)]
    if not all(x.is_finite for x in fq):
        raise Divergent(f"some f_j({q}) is infinite")
    G = d.embedded * np.array([x.value for x in fq])[:, None]
    T = [j for j in range(d.K) if j != i]
    out_i = G[i, T]
    into_i = G[T, i]
    B = G[np.ix_(T, T)]

    lower = 0.0
    v = out_i.copy()
    for _ in range(2, max_len + 1):
        lower += float(v @ into_i)
        v = v @ B
    # v now carries paths still inside T after max_len - 1 steps
    g_max = float(into_i.max())
    bound = math.inf
    Bp = B.copy()
    p = 1
    while p <= 64:
        norm = float(np.abs(Bp).sum(axis=1).max())
        if norm < 1.0:
            head = 0.0
            w = v.copy()
            for _ in range(p):
                head += float(w.sum())
                w = w @ B
            bound = head * g_max / (1.0 - norm)
            break
        Bp = Bp @ Bp
        p *= 2
    return lower, bound


def enumerate_excursions(K: int, i: int, max_len: int):
    """Yield every state sequence ``(i, x_1, ..., x_{n-1}, i)`` with
    ``2 <= n <= max_len`` and all ``x_m != i``. Exponential in ``max_len``;
    meant for small oracle checks."""
    others = [j for j in range(K) if j != i]
    for n in range(2, max_len + 1):
        for middle in itertools.product(others, repeat=n - 1):
            yield (i, *middle, i)


def path_sum(spec: ModelSpec, i: int, q: float, max_len: int) -> float:
    """Literal sum of ``prod P * prod f`` over :func:`enumerate_excursions`."""
    d = validate(spec)
    fq = [f(d, j, q).value for j in range(d.K)]
    P = d.embedded
    total = 0.0
    for path in enumerate_excursions(d.K, i, max_len):
        w = 1.0
        for x, y in zip(path, path[1:]):
            w *= P[x, y] * fq[x]
        total += w
    return total


def wiener_extremum_laplace(lam: float, sigma: float, beta: float, coeff: float,
                            side: str = "inf") -> ExtReal:
    """Laplace transform of the running extremum of a drifted Brownian motion
    over an independent exponential time.

    With ``X_s = W_s + sigma*beta*s/2`` and ``tau ~ Exp(lam)``:

    * ``side="inf"``: ``E[exp(-coeff * inf_{s<=tau} X_s)] = r/(r - coeff/sigma)``
    * ``side="sup"``: ``E[exp(coeff * sup_{s<=tau} X_s)] = rt/(rt - coeff/sigma)``

    where ``r = beta/2 + sqrt(beta**2/4 + 2*lam/sigma**2)`` and
    ``rt = -beta/2 + sqrt(beta**2/4 + 2*lam/sigma**2)``; both are ``inf``
    past the pole.
    """
    if side == "inf":
        rate = critical_exponent(lam, beta, sigma)
    elif side == "sup":
        rate = critical_exponent(lam, -beta, sigma)
    else:
        raise ValueError(f"side must be 'inf' or 'sup', got {side!r}")
    x = coeff / sigma
    if x < rate:
        return ExtReal(rate / (rate - x))
    return INF
