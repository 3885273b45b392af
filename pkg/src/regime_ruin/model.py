"""Regime-switching risk model: specification, validation, regime classification.

The reserve is fully invested in an asset whose log-price is, in regime j,
a Brownian motion with volatility ``sigma_j`` and drift ``a_j - sigma_j**2/2``.
The regime is a continuous-time Markov chain with generator ``Lambda``.
Business income is ``c*t`` plus two compound Poisson streams: downward
claims at rate ``alpha1`` with sizes ``F1`` and upward jumps at rate
``alpha2`` with sizes ``F2``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    InvalidClaimDist,
    ModelError,
    MonotonePremium,
    NegativeOffDiagonal,
    NonIrreducible,
    NonPositiveExponent,
    NonPositiveVolatility,
    RowSumError,
)
from .extreal import INF, ExtReal

ROW_SUM_TOL = 1e-12
N_DELTA_PROBE = 32

CLAIM_KINDS = ("exponential", "pareto", "deterministic", "empirical")


@dataclass(frozen=True)
class ClaimDist:
    """Law of the absolute jump size, supported on (0, inf).

    Use the constructors :meth:`exponential`, :meth:`pareto`,
    :meth:`deterministic` and :meth:`empirical`. The Pareto law has
    survival ``(scale/x)**shape`` for ``x >= scale``.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in CLAIM_KINDS:
            raise InvalidClaimDist(f"unknown claim kind {self.kind!r}")
        p = tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", p)
        expected = {"exponential": 1, "pareto": 2, "deterministic": 1}.get(self.kind)
        if expected is not None and len(p) != expected:
            raise InvalidClaimDist(f"{self.kind} takes {expected} parameter(s), got {len(p)}")
        if not p:
            raise InvalidClaimDist("empirical claim list must be non-empty")
        if not all(x > 0.0 and math.isfinite(x) for x in p):
            raise InvalidClaimDist(f"{self.kind} parameters must be finite and > 0: {p}")
        if self.kind == "empirical":
            object.__setattr__(self, "params", tuple(sorted(p)))

    @classmethod
    def exponential(cls, mean: float) -> ClaimDist:
        return cls("exponential", (mean,))

    @classmethod
    def pareto(cls, shape: float, scale: float) -> ClaimDist:
        return cls("pareto", (shape, scale))

    @classmethod
    def deterministic(cls, value: float) -> ClaimDist:
        return cls("deterministic", (value,))

    @classmethod
    def empirical(cls, values: Sequence[float]) -> ClaimDist:
        return cls("empirical", tuple(values))

    @property
    def unbounded(self) -> bool:
        """True if the support is not bounded above."""
        return self.kind in ("exponential", "pareto")

    def abs_moment(self, q: float) -> ExtReal:
        """``E[xi**q]`` in closed form, ``inf`` when divergent."""
        p = self.params
        if self.kind == "exponential":
            return ExtReal(p[0] ** q * math.gamma(q + 1.0))
        if self.kind == "pareto":
            shape, scale = p
            if q >= shape:
                return INF
            return ExtReal(shape * scale**q / (shape - q))
        if self.kind == "deterministic":
            return ExtReal(p[0] ** q)
        return ExtReal(sum(x**q for x in p) / len(p))

    def mean(self) -> float:
        return float(self.abs_moment(1.0))


@dataclass(frozen=True)
class ModelSpec:
    """Full model description; immutable and hashable.

    ``Lambda`` is stored row-major as a tuple of tuples. Construction does
    not validate; call :func:`validate`.
    """

    Lambda: tuple
    a: tuple
    sigma: tuple
    c: float
    alpha1: float = 0.0
    F1: Optional[ClaimDist] = None
    alpha2: float = 0.0
    F2: Optional[ClaimDist] = None
    initial_state: int = 0

    def __post_init__(self):
        object.__setattr__(self, "Lambda", tuple(tuple(float(x) for x in row) for row in self.Lambda))
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "sigma", tuple(float(x) for x in self.sigma))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "alpha1", float(self.alpha1))
        object.__setattr__(self, "alpha2", float(self.alpha2))
        object.__setattr__(self, "initial_state", int(self.initial_state))

    @property
    def K(self) -> int:
        return len(self.Lambda)

    def with_state(self, i: int) -> ModelSpec:
        return ModelSpec(self.Lambda, self.a, self.sigma, self.c, self.alpha1, self.F1,
                         self.alpha2, self.F2, i)


class RegimeClass(enum.Enum):
    POWER_TAIL = "PowerTail"
    RUIN_CERTAIN = "RuinCertain"
    UNSUPPORTED = "Unsupported"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DerivedParams:
    Lambda: np.ndarray  # repaired generator
    beta: np.ndarray
    beta_star: float
    beta_upper: float
    r: np.ndarray
    r_star: float
    lambda_vec: np.ndarray
    embedded: np.ndarray
    sigma: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return len(self.beta)


def critical_exponent(lam: float, beta: float, sigma: float) -> float:
    """Positive root of ``q**2 - beta*q - 2*lam/sigma**2``."""
    return beta / 2.0 + math.sqrt(beta * beta / 4.0 + 2.0 * lam / (sigma * sigma))


def _frozen(x: np.ndarray) -> np.ndarray:
    x.setflags(write=False)
    return x


def reachability(support: np.ndarray) -> np.ndarray:
    """Boolean transitive closure (paths of length >= 1) of an adjacency matrix."""
    reach = support.astype(bool).copy()
    n = len(reach)
    for k in range(n):
        reach |= np.outer(reach[:, k], reach[k, :])
    return reach


@functools.lru_cache(maxsize=256)
def validate(spec: ModelSpec) -> DerivedParams:
    K = spec.K
    if K < 2:
        raise ModelError(f"need at least 2 regimes, got K={K}")
    L = np.array(spec.Lambda, dtype=float)
    if L.shape != (K, K):
        raise ModelError(f"Lambda must be {K}x{K}, got shape {L.shape}")
    if len(spec.a) != K or len(spec.sigma) != K:
        raise ModelError("a and sigma must have length K")
    if not (np.all(np.isfinite(L)) and all(map(math.isfinite, spec.a))
            and all(map(math.isfinite, spec.sigma)) and math.isfinite(spec.c)):
        raise ModelError("model parameters must be finite")
    if not 0 <= spec.initial_state < K:
        raise ModelError(f"initial_state {spec.initial_state} outside 0..{K - 1}")

    off = ~np.eye(K, dtype=bool)
    if np.any(L[off] < 0.0):
        j, k = np.argwhere((L < 0.0) & off)[0]
        raise NegativeOffDiagonal(f"Lambda[{j},{k}] = {L[j, k]} < 0")
    rows = L.sum(axis=1)
    bad = np.abs(rows) > ROW_SUM_TOL
    if np.any(bad):
        j = int(np.argmax(bad))
        raise RowSumError(f"row {j} of Lambda sums to {rows[j]!r}, not 0")
    offsum = np.where(off, L, 0.0).sum(axis=1)
    L = np.where(off, L, 0.0) - np.diag(offsum)
    lam = offsum
    if np.any(lam <= 0.0):
        j = int(np.argmin(lam))
        raise NonIrreducible(f"state {j} is absorbing (lambda_{j} = 0)")

    sigma = np.array(spec.sigma, dtype=float)
    if np.any(sigma <= 0.0):
        j = int(np.argmin(sigma))
        raise NonPositiveVolatility(f"sigma[{j}] = {sigma[j]} must be > 0")

    P = np.where(off, L, 0.0) / lam[:, None]
    reach = reachability(P > 0.0)
    if not reach.all():
        j, k = np.argwhere(~reach)[0]
        raise NonIrreducible(f"state {k} is not reachable from state {j}")

    if spec.c >= 0.0 and spec.alpha1 == 0.0:
        raise MonotonePremium("c >= 0 with no downward jumps makes the reserve increasing; ruin is impossible")
    for name, alpha, dist in (("alpha1", spec.alpha1, spec.F1), ("alpha2", spec.alpha2, spec.F2)):
        if alpha < 0.0 or not math.isfinite(alpha):
            raise ModelError(f"{name} must be finite and >= 0, got {alpha}")
        if alpha > 0.0 and not isinstance(dist, ClaimDist):
            raise InvalidClaimDist(f"{name} > 0 requires a claim distribution")

    a = np.array(spec.a, dtype=float)
    beta = 2.0 * a / sigma**2 - 1.0
    r = beta / 2.0 + np.sqrt(beta**2 / 4.0 + 2.0 * lam / sigma**2)
    return DerivedParams(
        Lambda=_frozen(L),
        beta=_frozen(beta),
        beta_star=float(beta.min()),
        beta_upper=float(beta.max()),
        r=_frozen(r),
        r_star=float(r.min()),
        lambda_vec=_frozen(lam),
        embedded=_frozen(P),
        sigma=_frozen(sigma),
    )


def claim_abs_moment(spec: ModelSpec, q: float) -> ExtReal:
    """``Pi(|x|**q) = alpha1*E[xi1**q] + alpha2*E[xi2**q]``."""
    if not q > 0.0:
        raise NonPositiveExponent(f"moment order must be > 0, got {q}")
    total = ExtReal(0.0)
    for alpha, dist in ((spec.alpha1, spec.F1), (spec.alpha2, spec.F2)):
        if alpha > 0.0:
            total = total + alpha * dist.abs_moment(q)
    return total


def delta_probe_grid(beta_upper: float) -> np.ndarray:
    """Log-spaced points strictly inside ``(0, min(|beta_upper|, 1))``."""
    hi = min(abs(beta_upper), 1.0)
    return hi * np.geomspace(1e-3, 1.0, N_DELTA_PROBE + 1)[:-1]


def admissible_deltas(spec: ModelSpec, delta_probe=None) -> np.ndarray:
    """Probe points in ``(0, min(|beta^*|,1))`` with a finite claim moment."""
    d = validate(spec)
    hi = min(abs(d.beta_upper), 1.0)
    grid = delta_probe_grid(d.beta_upper) if delta_probe is None else np.asarray(delta_probe, float)
    ok = [x for x in grid if 0.0 < x < hi and claim_abs_moment(spec, float(x)).is_finite]
    return np.array(ok)


def classify_regime(spec: ModelSpec, delta_probe=None) -> RegimeClass:
    """Which tail regime the model falls into.

    RuinCertain additionally requires the downward claim law to have
    unbounded support, so that downward jumps exceed every level with
    positive probability.
    """
    d = validate(spec)
    if d.beta_star > 0.0:
        return RegimeClass.POWER_TAIL
    if (d.beta_upper < 0.0 and spec.alpha1 > 0.0 and spec.F1.unbounded
            and len(admissible_deltas(spec, delta_probe)) > 0):
        return RegimeClass.RUIN_CERTAIN
    return RegimeClass.UNSUPPORTED


def stationary_distribution(spec: ModelSpec) -> np.ndarray:
    L = validate(spec).Lambda
    K = len(L)
    A = np.vstack([L.T, np.ones(K)])
    b = np.zeros(K + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def mean_return_time(spec: ModelSpec, i: Optional[int] = None) -> float:
    """Expected first return time of the regime chain to state ``i``."""
    i = spec.initial_state if i is None else i
    d = validate(spec)
    return 1.0 / (stationary_distribution(spec)[i] * d.lambda_vec[i])


def drift_coefficients(spec: ModelSpec) -> np.ndarray:
    """Per-regime drift of the log-price, ``sigma_j**2 * beta_j / 2``."""
    d = validate(spec)
    return d.sigma**2 * d.beta / 2.0
