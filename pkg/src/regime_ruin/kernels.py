"""Backend selection for the simulation kernels.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
pure-Python ``_pykernels`` twin. Both expose the same functions and consume
random variates identically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import _pykernels
from .model import ModelSpec, drift_coefficients, validate

logger = logging.getLogger(__name__)

_KIND_CODES = {"exponential": 0, "pareto": 1, "deterministic": 2, "empirical": 3}

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None
    logger.debug("compiled kernels unavailable; using pure-Python fallback")

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

_active = _ckernels if _ckernels is not None else _pykernels


def backend():
    """The kernel module currently in use."""
    return _active


def available_backends():
    return list(BACKENDS)


def use_backend(name: str):
    """Switch kernels process-wide; returns the previous backend name."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    prev = _active.NAME
    _active = BACKENDS[name]
    return prev


@dataclass(frozen=True)
class KernelModel:
    """Flat numeric view of a validated model, as the kernels consume it."""

    K: int
    lam: tuple
    cum: tuple
    mu: tuple
    sig: tuple
    c: float
    alpha: float
    p_down: float
    k1: int
    p1: tuple
    emp1: tuple
    k2: int
    p2: tuple
    emp2: tuple

    @classmethod
    def from_spec(cls, spec: ModelSpec) -> KernelModel:
        d = validate(spec)
        K = d.K
        cum = []
        for row in d.embedded:
            acc = 0.0
            out = []
            for x in row:
                acc += x
                out.append(acc)
            last_pos = max(k for k in range(K) if row[k] > 0.0)
            for k in range(last_pos, K):
                out[k] = 1.0
            cum.append(tuple(out))
        alpha = spec.alpha1 + spec.alpha2
        p_down = spec.alpha1 / alpha if alpha > 0.0 else 0.0

        def pack(dist):
            if dist is None:
                return -1, (0.0, 0.0), ()
            code = _KIND_CODES[dist.kind]
            if dist.kind == "empirical":
                return code, (0.0, 0.0), dist.params
            p = dist.params + (0.0,) * (2 - len(dist.params))
            return code, p, ()

        k1, p1, e1 = pack(spec.F1 if spec.alpha1 > 0.0 else None)
        k2, p2, e2 = pack(spec.F2 if spec.alpha2 > 0.0 else None)
        return cls(K, tuple(float(x) for x in d.lambda_vec), tuple(cum),
                   tuple(float(x) for x in drift_coefficients(spec)),
                   tuple(float(x) for x in d.sigma), spec.c, alpha, p_down,
                   k1, p1, e1, k2, p2, e2)
