"""Pure-Python simulation kernels.

Reference twin of ``_ckernels.pyx``: identical algorithms and identical
calls into the numpy ``Generator`` in identical order, so both backends
consume the same variates and agree to floating-point rounding.
"""

from math import ceil, exp, sqrt

from .errors import ExcursionOverflow

NAME = "python"
MAX_JUMPS = 10_000_000

EXPONENTIAL, PARETO, DETERMINISTIC, EMPIRICAL = 0, 1, 2, 3


def prepare(km):
    return km


def _claim_size(gen, kind, p0, p1, emp):
    if kind == EXPONENTIAL:
        return p0 * gen.standard_exponential()
    if kind == PARETO:
        return p1 * exp(gen.standard_exponential() / p0)
    if kind == DETERMINISTIC:
        return p0
    n = len(emp)
    idx = int(gen.random() * n)
    if idx >= n:
        idx = n - 1
    return emp[idx]


def excursion(gen, km, i):
    """Regime path from ``i`` to its first return, then the claims on it.

    Returns ``(states, durations, total, claim_times, claim_sizes)``;
    downward claim sizes are negative.
    """
    lam = km.lam
    cum = km.cum
    states = []
    durs = []
    total = 0.0
    j = i
    while True:
        d = gen.standard_exponential() / lam[j]
        states.append(j)
        durs.append(d)
        total += d
        u = gen.random()
        row = cum[j]
        k = 0
        while u >= row[k]:
            k += 1
        j = k
        if j == i:
            break
        if len(states) >= MAX_JUMPS:
            raise ExcursionOverflow(f"no return to state {i} after {MAX_JUMPS} jumps")
    times = []
    sizes = []
    alpha = km.alpha
    if alpha > 0.0:
        t = gen.standard_exponential() / alpha
        while t < total:
            if gen.random() < km.p_down:
                x = -_claim_size(gen, km.k1, km.p1[0], km.p1[1], km.emp1)
            else:
                x = _claim_size(gen, km.k2, km.p2[0], km.p2[1], km.emp2)
            times.append(t)
            sizes.append(x)
            t += gen.standard_exponential() / alpha
    return states, durs, total, times, sizes


def cycle(gen, km, states, durs, times, sizes, h, levels=0,
          track=False, y0=0.0, mpre=1.0, u=0.0, t0=0.0, horizon=0.0):
    """Log-price and discounted net payout over one excursion.

    Each gap between consecutive event times (regime switches and claims)
    of length ``D`` is cut into ``ceil(D/h) * 2**levels`` equal substeps
    with exact Gaussian increments. The premium integral of ``exp(-V)`` is
    accumulated by the trapezoid rule at every level ``l`` using every
    ``2**(levels-l)``-th node, so level ``l`` is the step-``h/2**l`` rule on
    a nested grid.

    With ``track=True``, ``y0 + mpre * Q(t)`` is checked against ``u`` at
    every node with global time ``t0 + t <= horizon``.

    Returns ``(V_end, [Q_0, ..., Q_levels], status)`` where ``status`` is 1
    if a crossing was seen, 2 if the horizon was passed first, else 0.
    """
    normal = gen.standard_normal
    mu = km.mu
    sig = km.sig
    c = km.c
    nlev = levels + 1
    integ = [0.0] * nlev
    last = [0.0] * nlev
    V = 0.0
    E = 1.0
    jumps = 0.0
    t = 0.0
    p = 0
    nc = len(times)
    status = 0
    for k in range(len(states)):
        j = states[k]
        m_j = mu[j]
        s_j = sig[j]
        seg_end = t + durs[k]
        a = t
        while True:
            if p < nc and times[p] < seg_end:
                b = times[p]
                is_claim = True
            else:
                b = seg_end
                is_claim = False
            gap = b - a
            n_sub = max(1, int(ceil(gap / h))) << levels
            dt = gap / n_sub
            sd = s_j * sqrt(dt)
            drift = m_j * dt
            for lev in range(nlev):
                last[lev] = E
            for n in range(1, n_sub + 1):
                V += drift + sd * normal()
                E = exp(-V)
                for lev in range(nlev):
                    stride = 1 << (levels - lev)
                    if n % stride == 0:
                        integ[lev] += 0.5 * (last[lev] + E) * dt * stride
                        last[lev] = E
                if track and status == 0:
                    tn = t0 + a + n * dt
                    if tn > horizon:
                        status = 2
                    elif y0 + mpre * (-jumps - c * integ[0]) >= u:
                        status = 1
            if is_claim:
                jumps += E * sizes[p]
                p += 1
                if track and status == 0 and t0 + b <= horizon:
                    if y0 + mpre * (-jumps - c * integ[0]) >= u:
                        status = 1
                a = b
            else:
                break
        t = seg_end
        if track and status != 0:
            break
    return V, [-jumps - c * x for x in integ], status


def cycle_pair(gen, km, i, h):
    """One fresh ``(M, Q)``: excursion plus cycle at step ``h``."""
    st, du, _, ti, si = excursion(gen, km, i)
    V, Q, _ = cycle(gen, km, st, du, ti, si, h)
    return exp(-V), Q[0]


def cycle_ladder(gen, km, i, h, levels):
    """Fresh excursion; ``(M, Q_0, ..., Q_levels)`` on nested grids ``h / 2**l``."""
    st, du, _, ti, si = excursion(gen, km, i)
    V, Q, _ = cycle(gen, km, st, du, ti, si, h, levels)
    return (exp(-V), *Q)


def y_inf(gen, km, i, h, eps, n_max):
    """Perpetuity ``sum_k (M_1...M_{k-1}) Q_k`` truncated once the running
    product drops below ``eps`` or after ``n_max`` cycles.

    Returns ``(value, n_cycles, cap_hit)``.
    """
    total = 0.0
    prod = 1.0
    n = 0
    while True:
        st, du, _, ti, si = excursion(gen, km, i)
        V, Q, _ = cycle(gen, km, st, du, ti, si, h)
        total += prod * Q[0]
        prod *= exp(-V)
        n += 1
        if eps >= 1.0 or prod < eps:
            return total, n, False
        if n >= n_max:
            return total, n, True


def ruin_horizon(gen, km, i, u, horizon, h):
    """Grid-checked first passage of ``Y`` above ``u`` before ``horizon``.

    Returns ``(ruined, n_cycles)``.
    """
    y = 0.0
    prod = 1.0
    t0 = 0.0
    n = 0
    while t0 <= horizon:
        st, du, total, ti, si = excursion(gen, km, i)
        V, Q, status = cycle(gen, km, st, du, ti, si, h,
                             track=True, y0=y, mpre=prod, u=u, t0=t0, horizon=horizon)
        n += 1
        if status == 1:
            return True, n
        if status == 2:
            break
        y += prod * Q[0]
        prod *= exp(-V)
        t0 += total
    return False, n


def ruin_recursion(gen, km, i, u, h, n_max):
    """Reserve at return times, ``X_n = (X_{n-1} - Q_n) / M_n``.

    Returns the index of the first cycle with ``X_n < 0`` (0 if none
    within ``n_max``).
    """
    x = u
    for n in range(1, n_max + 1):
        st, du, _, ti, si = excursion(gen, km, i)
        V, Q, _ = cycle(gen, km, st, du, ti, si, h)
        x = (x - Q[0]) * exp(V)
        if x < 0.0:
            return n
    return 0
