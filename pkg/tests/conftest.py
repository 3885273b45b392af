import math
from pathlib import Path

import numpy as np
import pytest

from regime_ruin import kernels
from regime_ruin.model import ClaimDist, ModelSpec

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"

ACCEPTANCE_LINES = []


def record(criterion: int, title: str, ok: bool, detail: str = "") -> bool:
    ok = bool(ok)
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append((criterion, f"[{status}] criterion {criterion:2d}: {title} | {detail}"))
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def two_state(a=(1.0, 1.5), sigma=(1.0, 1.0), lam=(1.0, 1.0), c=1.0, alpha1=1.0,
              F1=ClaimDist.exponential(1.0), **kw):
    L = ((-lam[0], lam[0]), (lam[1], -lam[1]))
    return ModelSpec(L, tuple(a), tuple(sigma), c, alpha1, F1, **kw)


def random_spec(rng: np.random.Generator, K: int, beta_lo=0.2, beta_hi=3.0) -> ModelSpec:
    """Irreducible spec with a random sparse generator (a Hamiltonian cycle
    guarantees irreducibility) and betas in ``[beta_lo, beta_hi]``."""
    L = np.zeros((K, K))
    perm = rng.permutation(K)
    for k in range(K):
        L[perm[k], perm[(k + 1) % K]] = rng.uniform(0.2, 2.0)
    extra = rng.random((K, K)) < 0.5
    L += np.where(extra, rng.uniform(0.0, 2.0, (K, K)), 0.0)
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    sigma = rng.uniform(0.5, 1.5, K)
    beta = rng.uniform(beta_lo, beta_hi, K)
    a = (beta + 1.0) * sigma**2 / 2.0
    return ModelSpec(tuple(map(tuple, L)), tuple(a), tuple(sigma), 1.0, 1.0,
                     ClaimDist.exponential(1.0))


@pytest.fixture
def asym():
    return two_state()


@pytest.fixture
def sym():
    return two_state(a=(1.0, 1.0))


@pytest.fixture
def ruin_certain():
    return two_state(a=(0.0, 0.25))


@pytest.fixture(params=kernels.available_backends())
def each_backend(request):
    prev = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)


def close(a, b, tol):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)
