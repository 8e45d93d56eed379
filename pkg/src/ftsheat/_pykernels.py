"""Numpy/LAPACK implementation of the time-stepping kernels.

Used when the Cython extension is unavailable or ``FTSHEAT_BACKEND=python``.
Every function has the same signature and semantics as its counterpart in
``_ckernels.pyx``; arrays named ``y`` are updated in place.
"""
import numpy as np
from scipy.linalg import lapack

NAME = "python"

MAX_HALVINGS = 40


class DiffusionFactor:
    """LDL^T factors of the SPD matrix tridiag(-r, 1 + 2r, -r) from LAPACK ``dpttrf``."""

    def __init__(self, n, r):
        self.n = int(n)
        self.r = float(r)
        self._ldl = None
        if self.n == 1:
            # the f2py wrappers reject empty off-diagonals
            self._scalar = 1.0 / (1.0 + 2.0 * self.r)
            return
        d, e, info = lapack.dpttrf(np.full(self.n, 1.0 + 2.0 * self.r), np.full(self.n - 1, -self.r))
        if info != 0:
            raise np.linalg.LinAlgError(f"dpttrf failed with info={info}")
        self._ldl = (d, e)

    def solve(self, rhs):
        if self._ldl is None:
            return rhs * self._scalar
        x, info = lapack.dpttrs(*self._ldl, rhs)
        if info != 0:
            raise np.linalg.LinAlgError(f"dpttrs failed with info={info}")
        return x


def factor_diffusion(n, r):
    return DiffusionFactor(n, r)


def solve_diffusion(factor, rhs, out=None):
    x = factor.solve(np.asarray(rhs, dtype=np.float64))
    if out is None:
        return x
    out[...] = x
    return out


def shrink_array(v, tau, out):
    np.multiply(np.sign(v), np.maximum(np.abs(v) - tau, 0.0), out=out)
    out[out == 0.0] = 0.0  # drop signed zeros


def sign_block(y, dvals, shape, gate, tau, factor, cw, sel, linf, sumsq, ctlsq):
    """Advance the sign closed loop ``len(dvals)`` steps in place.

    Step k adds ``dvals[k] * shape``, diffuses, and soft-thresholds by
    ``tau`` when ``gate[k]``.  Per-step sup norm, sum of squares and the sum
    of squares of ``cw * selection`` are written to ``linf``, ``sumsq``,
    ``ctlsq``.  Returns the first step with a non-finite state, or -1.
    """
    for k in range(dvals.shape[0]):
        d = dvals[k]
        if d != 0.0:
            y += d * shape
        if factor is not None:
            y[:] = factor.solve(y)
        if not np.isfinite(y).all():
            return k
        if gate[k]:
            v = y.copy()
            shrink_array(v, tau, y)
            sel[:] = np.where(y != 0.0, np.sign(y), v / tau)
            u = cw * sel
            ctlsq[k] = np.dot(u, u)
        else:
            ctlsq[k] = 0.0
        linf[k] = np.max(np.abs(y))
        sumsq[k] = np.dot(y, y)
    return -1


def _rate(s, mu, zero_tol, reaction):
    if s <= zero_tol:
        return 0.0
    c = s ** (-mu)
    if reaction:
        c = c + c / (1.0 + s * s)
    return c


def nonlinear_block(y, a, nsteps, dt, hx, mu, zero_tol, settle_tol, reaction, factor,
                    sumsq, linf, wnorm):
    """Advance the fractional-power closed loop ``nsteps`` steps in place.

    Explicit trapezoid update of reaction and control, then backward-Euler
    diffusion; substeps are halved while any node would overshoot zero.
    Returns (bad_step, halvings) with bad_step = -1 on success.
    """
    amax = float(np.max(a))
    halvings = 0
    fresh = {}
    for k in range(nsteps):
        rem = dt
        h = dt
        local = 0
        while rem > 0.0:
            hh = min(h, rem)
            c0 = _rate(np.sqrt(hx * np.dot(a * y, y)), mu, zero_tol, reaction)
            if c0 > 0.0:
                ok = hh * c0 * amax <= 1.0
                if ok:
                    p = 1.0 - hh * c0 * a
                    yp = y * p
                    c1 = _rate(np.sqrt(hx * np.dot(a * yp, yp)), mu, zero_tol, reaction)
                    f = 1.0 - 0.5 * hh * (c0 * a + c1 * a * p)
                    ok = bool(np.all(f >= 0.0))
                if not ok:
                    local += 1
                    halvings += 1
                    if local > MAX_HALVINGS:
                        return k, halvings
                    h *= 0.5
                    continue
                y *= f
            if factor is not None:
                if hh == dt:
                    y[:] = factor.solve(y)
                else:
                    if hh not in fresh:
                        fresh[hh] = DiffusionFactor(y.shape[0], hh / (hx * hx))
                    y[:] = fresh[hh].solve(y)
            rem -= hh
            nrm = np.sqrt(hx * np.dot(y, y))
            if not np.isfinite(nrm):
                return k, halvings
            if nrm <= settle_tol:
                y[:] = 0.0
                break
        sumsq[k] = np.dot(y, y)
        linf[k] = np.max(np.abs(y))
        wnorm[k] = np.sqrt(hx * np.dot(a * y, y))
    return -1, halvings
