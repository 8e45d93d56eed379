# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-stepping kernels.

Mirrors ``ftsheat._pykernels`` function for function; see that module for
the argument conventions.  The diffusion matrix is tridiag(-r, 1 + 2r, -r)
with r = dt / h**2, solved by Thomas elimination with cached pivots.
"""
from libc.math cimport sqrt, pow, fabs, isfinite

import numpy as np

NAME = "cython"

cdef int MAX_HALVINGS = 40


cdef class DiffusionFactor:
    cdef readonly int n
    cdef readonly double r
    cdef double[::1] cprime
    cdef double[::1] inv_pivot

    def __init__(self, int n, double r):
        cdef int i
        cdef double m
        self.n = n
        self.r = r
        self.cprime = np.empty(n)
        self.inv_pivot = np.empty(n)
        m = 1.0 + 2.0 * r
        self.inv_pivot[0] = 1.0 / m
        self.cprime[0] = -r / m
        for i in range(1, n):
            m = 1.0 + 2.0 * r + r * self.cprime[i - 1]
            self.inv_pivot[i] = 1.0 / m
            self.cprime[i] = -r / m

    cdef void solve_inplace(self, double[::1] y) noexcept nogil:
        cdef int i
        cdef int n = self.n
        cdef double r = self.r
        y[0] = y[0] * self.inv_pivot[0]
        for i in range(1, n):
            y[i] = (y[i] + r * y[i - 1]) * self.inv_pivot[i]
        for i in range(n - 2, -1, -1):
            y[i] = y[i] - self.cprime[i] * y[i + 1]


def factor_diffusion(int n, double r):
    return DiffusionFactor(n, r)


def solve_diffusion(DiffusionFactor factor, rhs, out=None):
    cdef double[::1] x
    if out is None:
        out = np.array(rhs, dtype=np.float64, copy=True)
    else:
        out[...] = rhs
    x = out
    factor.solve_inplace(x)
    return out


cdef void thomas_fresh(double[::1] y, double r, double[::1] work) noexcept nogil:
    # unfactored solve for substep sizes that have no cached factor
    cdef int i
    cdef int n = y.shape[0]
    cdef double m = 1.0 + 2.0 * r
    work[0] = -r / m
    y[0] = y[0] / m
    for i in range(1, n):
        m = 1.0 + 2.0 * r + r * work[i - 1]
        work[i] = -r / m
        y[i] = (y[i] + r * y[i - 1]) / m
    for i in range(n - 2, -1, -1):
        y[i] = y[i] - work[i] * y[i + 1]


def shrink_array(double[::1] v, double tau, double[::1] out):
    cdef Py_ssize_t i
    cdef double a
    for i in range(v.shape[0]):
        a = fabs(v[i]) - tau
        if a <= 0.0:
            out[i] = 0.0
        elif v[i] > 0.0:
            out[i] = a
        else:
            out[i] = -a


cdef Py_ssize_t _sign_loop(double[::1] y, const double[::1] dvals, const double[::1] shape,
                           const unsigned char[::1] gate, double tau, DiffusionFactor factor,
                           bint diffuse, const double[::1] cw, double[::1] sel, double[::1] linf,
                           double[::1] sumsq, double[::1] ctlsq) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t m = dvals.shape[0]
    cdef Py_ssize_t i, k
    cdef double d, v, a, mx, acc, sq, cq, u
    for k in range(m):
        d = dvals[k]
        if d != 0.0:
            for i in range(n):
                y[i] = y[i] + d * shape[i]
        if diffuse:
            factor.solve_inplace(y)
        mx = 0.0
        acc = 0.0
        sq = 0.0
        cq = 0.0
        if gate[k]:
            for i in range(n):
                v = y[i]
                a = fabs(v) - tau
                if a > 0.0:
                    if v > 0.0:
                        y[i] = a
                        sel[i] = 1.0
                    else:
                        y[i] = -a
                        sel[i] = -1.0
                    if a > mx:
                        mx = a
                    sq = sq + a * a
                else:
                    y[i] = 0.0
                    sel[i] = v / tau
                u = cw[i] * sel[i]
                cq = cq + u * u
                acc = acc + v
        else:
            for i in range(n):
                a = fabs(y[i])
                if a > mx:
                    mx = a
                sq = sq + a * a
                acc = acc + y[i]
        linf[k] = mx
        sumsq[k] = sq
        ctlsq[k] = cq
        if not isfinite(acc):
            return k
    return -1


def sign_block(double[::1] y, const double[::1] dvals, const double[::1] shape,
               const unsigned char[::1] gate, double tau, DiffusionFactor factor,
               const double[::1] cw, double[::1] sel, double[::1] linf,
               double[::1] sumsq, double[::1] ctlsq):
    """Advance the sign closed loop ``len(dvals)`` steps in place.

    Returns the index of the first step producing a non-finite state, or -1.
    ``sel`` receives the resolvent selection of the last gated step.
    """
    cdef Py_ssize_t bad
    cdef bint diffuse = factor is not None
    with nogil:
        bad = _sign_loop(y, dvals, shape, gate, tau, factor, diffuse, cw, sel, linf, sumsq, ctlsq)
    return bad


cdef double rate(double s, double mu, double zero_tol, bint reaction) noexcept nogil:
    cdef double c
    if s <= zero_tol:
        return 0.0
    c = pow(s, -mu)
    if reaction:
        c = c + c / (1.0 + s * s)
    return c


cdef double weighted_norm(double[::1] y, const double[::1] a, double hx) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(y.shape[0]):
        acc = acc + a[i] * y[i] * y[i]
    return sqrt(hx * acc)


cdef int _nonlinear_loop(double[::1] y, const double[::1] a, int nsteps, double dt, double hx,
                         double mu, double zero_tol, double settle_tol, bint reaction,
                         DiffusionFactor factor, bint diffuse, double[::1] sumsq,
                         double[::1] linf, double[::1] wnorm,
                         double[::1] yp, double[::1] work, int* halvings) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t i
    cdef int k, local
    cdef double amax = 0.0, s0, c0, s1, c1 = 0.0, hh, rem, h, f, p, acc, nrm
    cdef double inv_hx2 = 1.0 / (hx * hx)
    cdef bint ok, zero
    for i in range(n):
        if a[i] > amax:
            amax = a[i]
    for k in range(nsteps):
        rem = dt
        h = dt
        local = 0
        zero = False
        while rem > 0.0 and not zero:
            hh = h if h < rem else rem
            s0 = weighted_norm(y, a, hx)
            c0 = rate(s0, mu, zero_tol, reaction)
            if c0 > 0.0:
                ok = hh * c0 * amax <= 1.0
                if ok:
                    for i in range(n):
                        yp[i] = y[i] * (1.0 - hh * c0 * a[i])
                    s1 = weighted_norm(yp, a, hx)
                    c1 = rate(s1, mu, zero_tol, reaction)
                    for i in range(n):
                        p = 1.0 - hh * c0 * a[i]
                        f = 1.0 - 0.5 * hh * (c0 * a[i] + c1 * a[i] * p)
                        if f < 0.0:
                            ok = False
                            break
                if not ok:
                    local = local + 1
                    halvings[0] = halvings[0] + 1
                    if local > MAX_HALVINGS:
                        return k
                    h = 0.5 * h
                    continue
                for i in range(n):
                    p = 1.0 - hh * c0 * a[i]
                    y[i] = y[i] * (1.0 - 0.5 * hh * (c0 * a[i] + c1 * a[i] * p))
            if diffuse:
                if hh == dt:
                    factor.solve_inplace(y)
                else:
                    thomas_fresh(y, hh * inv_hx2, work)
            rem = rem - hh
            acc = 0.0
            for i in range(n):
                acc = acc + y[i] * y[i]
            nrm = sqrt(hx * acc)
            if not isfinite(nrm):
                return k
            if nrm <= settle_tol:
                for i in range(n):
                    y[i] = 0.0
                zero = True
        acc = 0.0
        nrm = 0.0
        for i in range(n):
            acc = acc + y[i] * y[i]
            if fabs(y[i]) > nrm:
                nrm = fabs(y[i])
        sumsq[k] = acc
        linf[k] = nrm
        wnorm[k] = weighted_norm(y, a, hx)
    return -1


def nonlinear_block(double[::1] y, const double[::1] a, int nsteps, double dt, double hx,
                    double mu, double zero_tol, double settle_tol, bint reaction,
                    DiffusionFactor factor, double[::1] sumsq, double[::1] linf,
                    double[::1] wnorm):
    """Advance the fractional-power closed loop ``nsteps`` steps in place.

    Each substep applies an explicit trapezoid (Heun) update of the reaction
    and control terms, then backward-Euler diffusion.  A substep is halved
    while any node would overshoot zero.  Per-step sum of squares, sup norm
    and ||sqrt(a) y|| go to ``sumsq``, ``linf``, ``wnorm``.  Returns
    (bad_step, halvings) with bad_step = -1 on success.
    """
    cdef int halvings = 0
    cdef int bad
    cdef bint diffuse = factor is not None
    cdef double[::1] work = np.empty(y.shape[0])
    cdef double[::1] yp = np.empty(y.shape[0])
    with nogil:
        bad = _nonlinear_loop(y, a, nsteps, dt, hx, mu, zero_tol, settle_tol, reaction,
                              factor, diffuse, sumsq, linf, wnorm, yp, work, &halvings)
    return bad, halvings
