# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernels.

Mirror of ``_pykernels``: same algorithms, same order of calls into the
numpy bit generator, so both backends consume identical variates.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport ceil, exp, sqrt
from libc.stdlib cimport free, malloc, realloc
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_exponential,
    random_standard_normal,
    random_standard_uniform,
)

from .errors import ExcursionOverflow

NAME = "cython"

DEF MAX_LEVELS = 16
cdef long MAX_JUMPS = 10000000

cdef enum:
    EXPONENTIAL = 0
    PARETO = 1
    DETERMINISTIC = 2
    EMPIRICAL = 3


cdef bitgen_t* _bitgen(object gen) except NULL:
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("generator does not expose a numpy BitGenerator capsule")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef double* _copy(seq) except NULL:
    cdef Py_ssize_t n = max(len(seq), 1)
    cdef double* out = <double*> malloc(n * sizeof(double))
    if out == NULL:
        raise MemoryError()
    for k in range(len(seq)):
        out[k] = seq[k]
    return out


cdef class CModel:
    """C-side copy of a ``KernelModel`` plus reusable excursion buffers."""

    cdef int K
    cdef double* lam
    cdef double* mu
    cdef double* sig
    cdef double* cum
    cdef double c, alpha, p_down
    cdef int k1, k2
    cdef double p1a, p1b, p2a, p2b
    cdef double* emp1
    cdef double* emp2
    cdef long n1, n2

    cdef int* st
    cdef double* du
    cdef long ns, cap_s
    cdef double* ti
    cdef double* si
    cdef long nc, cap_c
    cdef double total

    def __cinit__(self, km):
        self.K = km.K
        self.lam = _copy(km.lam)
        self.mu = _copy(km.mu)
        self.sig = _copy(km.sig)
        self.cum = _copy([x for row in km.cum for x in row])
        self.c = km.c
        self.alpha = km.alpha
        self.p_down = km.p_down
        self.k1 = km.k1
        self.k2 = km.k2
        self.p1a, self.p1b = km.p1
        self.p2a, self.p2b = km.p2
        self.emp1 = _copy(km.emp1)
        self.emp2 = _copy(km.emp2)
        self.n1 = len(km.emp1)
        self.n2 = len(km.emp2)
        self.cap_s = 64
        self.cap_c = 64
        self.st = <int*> malloc(self.cap_s * sizeof(int))
        self.du = <double*> malloc(self.cap_s * sizeof(double))
        self.ti = <double*> malloc(self.cap_c * sizeof(double))
        self.si = <double*> malloc(self.cap_c * sizeof(double))
        if self.st == NULL or self.du == NULL or self.ti == NULL or self.si == NULL:
            raise MemoryError()
        self.ns = 0
        self.nc = 0

    def __dealloc__(self):
        free(self.lam); free(self.mu); free(self.sig); free(self.cum)
        free(self.emp1); free(self.emp2)
        free(self.st); free(self.du); free(self.ti); free(self.si)

    cdef int _grow_s(self) except -1:
        cdef long cap = self.cap_s * 2
        cdef int* st = <int*> realloc(self.st, cap * sizeof(int))
        if st == NULL:
            raise MemoryError()
        self.st = st
        cdef double* du = <double*> realloc(self.du, cap * sizeof(double))
        if du == NULL:
            raise MemoryError()
        self.du = du
        self.cap_s = cap
        return 0

    cdef int _grow_c(self) except -1:
        cdef long cap = self.cap_c * 2
        cdef double* ti = <double*> realloc(self.ti, cap * sizeof(double))
        if ti == NULL:
            raise MemoryError()
        self.ti = ti
        cdef double* si = <double*> realloc(self.si, cap * sizeof(double))
        if si == NULL:
            raise MemoryError()
        self.si = si
        self.cap_c = cap
        return 0

    cdef double _claim_size(self, bitgen_t* bg, int kind, double p0, double p1,
                            double* emp, long n) noexcept nogil:
        cdef long idx
        if kind == EXPONENTIAL:
            return p0 * random_standard_exponential(bg)
        if kind == PARETO:
            return p1 * exp(random_standard_exponential(bg) / p0)
        if kind == DETERMINISTIC:
            return p0
        idx = <long> (random_standard_uniform(bg) * n)
        if idx >= n:
            idx = n - 1
        return emp[idx]

    cdef int excursion(self, bitgen_t* bg, int i) except -1:
        cdef int j = i
        cdef int k
        cdef double d, u, t, x
        cdef double* row
        self.ns = 0
        self.nc = 0
        self.total = 0.0
        while True:
            d = random_standard_exponential(bg) / self.lam[j]
            if self.ns == self.cap_s:
                self._grow_s()
            self.st[self.ns] = j
            self.du[self.ns] = d
            self.ns += 1
            self.total += d
            u = random_standard_uniform(bg)
            row = self.cum + j * self.K
            k = 0
            while u >= row[k]:
                k += 1
            j = k
            if j == i:
                break
            if self.ns >= MAX_JUMPS:
                raise ExcursionOverflow(f"no return to state {i} after {MAX_JUMPS} jumps")
        if self.alpha > 0.0:
            t = random_standard_exponential(bg) / self.alpha
            while t < self.total:
                if random_standard_uniform(bg) < self.p_down:
                    x = -self._claim_size(bg, self.k1, self.p1a, self.p1b, self.emp1, self.n1)
                else:
                    x = self._claim_size(bg, self.k2, self.p2a, self.p2b, self.emp2, self.n2)
                if self.nc == self.cap_c:
                    self._grow_c()
                self.ti[self.nc] = t
                self.si[self.nc] = x
                self.nc += 1
                t += random_standard_exponential(bg) / self.alpha
        return 0

    cdef int cycle(self, bitgen_t* bg, double h, int levels, double* V_out, double* Q_out,
                   bint track, double y0, double mpre, double u, double t0,
                   double horizon) noexcept nogil:
        cdef int nlev = levels + 1
        cdef double integ[MAX_LEVELS]
        cdef double last[MAX_LEVELS]
        cdef double V = 0.0, E = 1.0, jumps = 0.0, t = 0.0
        cdef double m_j, s_j, seg_end, a, b, gap, dt, sd, drift, tn
        cdef long p = 0, n_sub, n, k
        cdef long stride
        cdef int j, lev, status = 0
        cdef bint is_claim
        for lev in range(nlev):
            integ[lev] = 0.0
            last[lev] = 0.0
        for k in range(self.ns):
            j = self.st[k]
            m_j = self.mu[j]
            s_j = self.sig[j]
            seg_end = t + self.du[k]
            a = t
            while True:
                if p < self.nc and self.ti[p] < seg_end:
                    b = self.ti[p]
                    is_claim = True
                else:
                    b = seg_end
                    is_claim = False
                gap = b - a
                n_sub = <long> ceil(gap / h)
                if n_sub < 1:
                    n_sub = 1
                n_sub = n_sub << levels
                dt = gap / n_sub
                sd = s_j * sqrt(dt)
                drift = m_j * dt
                for lev in range(nlev):
                    last[lev] = E
                for n in range(1, n_sub + 1):
                    V += drift + sd * random_standard_normal(bg)
                    E = exp(-V)
                    for lev in range(nlev):
                        stride = (<long> 1) << (levels - lev)
                        if n % stride == 0:
                            integ[lev] += 0.5 * (last[lev] + E) * dt * stride
                            last[lev] = E
                    if track and status == 0:
                        tn = t0 + a + n * dt
                        if tn > horizon:
                            status = 2
                        elif y0 + mpre * (-jumps - self.c * integ[0]) >= u:
                            status = 1
                if is_claim:
                    jumps += E * self.si[p]
                    p += 1
                    if track and status == 0 and t0 + b <= horizon:
                        if y0 + mpre * (-jumps - self.c * integ[0]) >= u:
                            status = 1
                    a = b
                else:
                    break
            t = seg_end
            if track and status != 0:
                break
        V_out[0] = V
        for lev in range(nlev):
            Q_out[lev] = -jumps - self.c * integ[lev]
        return status


def prepare(km):
    return CModel(km)


def excursion(gen, CModel m, int i):
    cdef bitgen_t* bg = _bitgen(gen)
    m.excursion(bg, i)
    states = [m.st[k] for k in range(m.ns)]
    durs = [m.du[k] for k in range(m.ns)]
    times = [m.ti[k] for k in range(m.nc)]
    sizes = [m.si[k] for k in range(m.nc)]
    return states, durs, m.total, times, sizes


def cycle(gen, CModel m, states, durs, times, sizes, double h, int levels=0,
          bint track=False, double y0=0.0, double mpre=1.0, double u=0.0,
          double t0=0.0, double horizon=0.0):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef double V
    cdef double Q[MAX_LEVELS]
    if not 0 <= levels < MAX_LEVELS:
        raise ValueError(f"levels must be in [0, {MAX_LEVELS})")
    m.ns = 0
    m.nc = 0
    for s, d in zip(states, durs):
        if m.ns == m.cap_s:
            m._grow_s()
        m.st[m.ns] = s
        m.du[m.ns] = d
        m.ns += 1
    for tt, x in zip(times, sizes):
        if m.nc == m.cap_c:
            m._grow_c()
        m.ti[m.nc] = tt
        m.si[m.nc] = x
        m.nc += 1
    status = m.cycle(bg, h, levels, &V, Q, track, y0, mpre, u, t0, horizon)
    return V, [Q[k] for k in range(levels + 1)], status


def cycle_pair(gen, CModel m, int i, double h):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef double V, Q
    m.excursion(bg, i)
    m.cycle(bg, h, 0, &V, &Q, False, 0.0, 1.0, 0.0, 0.0, 0.0)
    return exp(-V), Q


def cycle_ladder(gen, CModel m, int i, double h, int levels):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef double V
    cdef double Q[MAX_LEVELS]
    if not 0 <= levels < MAX_LEVELS:
        raise ValueError(f"levels must be in [0, {MAX_LEVELS})")
    m.excursion(bg, i)
    m.cycle(bg, h, levels, &V, Q, False, 0.0, 1.0, 0.0, 0.0, 0.0)
    return (exp(-V), *[Q[k] for k in range(levels + 1)])


def y_inf(gen, CModel m, int i, double h, double eps, long n_max):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef double total = 0.0, prod = 1.0, V, Q
    cdef long n = 0
    while True:
        m.excursion(bg, i)
        m.cycle(bg, h, 0, &V, &Q, False, 0.0, 1.0, 0.0, 0.0, 0.0)
        total += prod * Q
        prod *= exp(-V)
        n += 1
        if eps >= 1.0 or prod < eps:
            return total, n, False
        if n >= n_max:
            return total, n, True


def ruin_horizon(gen, CModel m, int i, double u, double horizon, double h):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef double y = 0.0, prod = 1.0, t0 = 0.0, V, Q
    cdef long n = 0
    cdef int status
    while t0 <= horizon:
        m.excursion(bg, i)
        status = m.cycle(bg, h, 0, &V, &Q, True, y, prod, u, t0, horizon)
        n += 1
        if status == 1:
            return True, n
        if status == 2:
            break
        y += prod * Q
        prod *= exp(-V)
        t0 += m.total
    return False, n


def ruin_recursion(gen, CModel m, int i, double u, double h, long n_max):
    cdef bitgen_t* bg = _bitgen(gen)
    cdef double x = u, V, Q
    cdef long n
    for n in range(1, n_max + 1):
        m.excursion(bg, i)
        m.cycle(bg, h, 0, &V, &Q, False, 0.0, 1.0, 0.0, 0.0, 0.0)
        x = (x - Q) * exp(V)
        if x < 0.0:
            return n
    return 0
