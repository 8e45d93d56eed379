"""Settling-time bounds and trajectory certificates.

Bounds:
    sign feedback, no delay     T <= ||y0||_inf / (rho - ||f||_inf)
    sign feedback, delay theta  T <= theta + ||y(theta)||_inf / (rho - ||f||_inf)
    fractional-power feedback   T <= ||y0||^mu / (beta^(1 - mu/2) mu)
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .feedback import NonlinearFeedback, SignFeedback
from .grid import GainProfile

THM2_CASE1 = "Thm2_Case1"
THM2_CASE2 = "Thm2_Case2"
THM4 = "Thm4"


@dataclass(frozen=True)
class BoundReport:
    theorem: str
    t_bound: float
    t_numeric: float | None
    satisfied: bool
    margin: float | None

    @classmethod
    def build(cls, theorem: str, t_bound: float, t_numeric: float | None) -> "BoundReport":
        if t_numeric is None:
            return cls(theorem, float(t_bound), None, False, None)
        return cls(theorem, float(t_bound), float(t_numeric), bool(t_numeric <= t_bound),
                   float(t_bound - t_numeric))

    def to_dict(self) -> dict:
        return asdict(self)


def _check_gap(rho, f_inf):
    if f_inf < 0:
        raise ValueError(f"disturbance bound must be nonnegative, got {f_inf}")
    if not rho > f_inf:
        raise ValueError(f"need rho > ||f||_inf (got rho={rho}, ||f||_inf={f_inf})")


def bound_theorem2(y0_inf: float, rho: float, f_inf: float) -> float:
    _check_gap(rho, f_inf)
    if y0_inf < 0:
        raise ValueError("y0_inf must be nonnegative")
    return y0_inf / (rho - f_inf)


def bound_theorem2_delayed(theta: float, y_theta_inf: float, rho: float, f_inf: float) -> float:
    if not theta > 0:
        raise ValueError(f"delay theta must be positive, got {theta}")
    return theta + bound_theorem2(y_theta_inf, rho, f_inf)


def bound_theorem4(y0_l2: float, beta: float, mu: float) -> float:
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    return y0_l2**mu / (beta ** (1.0 - mu / 2.0) * mu)


def beta_from_profile(a: GainProfile) -> float:
    """Coercivity constant for B = sqrt(a): the closed-form infimum for builtin
    profiles, else the node minimum."""
    beta = a.analytic_inf if a.analytic_inf is not None else a.inf_bound
    if not beta > 0:
        raise ValueError(f"gain profile is not bounded away from zero (beta = {beta:g})")
    return float(beta)


def detect_settling(traj, tol: float) -> float | None:
    """Earliest record time after which the state stays settled.

    tol = 0 means the state must be exactly zero (sup norm 0); otherwise the
    L2 norm must stay <= tol.  None when the last record is not settled.
    """
    if len(traj.times) == 0:
        return None
    if tol == 0:
        inside = np.asarray(traj.norm_linf) == 0.0
    else:
        inside = np.asarray(traj.norm_l2) <= tol
    outside = np.flatnonzero(~inside)
    if outside.size == 0:
        return float(traj.times[0])
    last = int(outside[-1])
    if last == len(inside) - 1:
        return None
    return float(traj.times[last + 1])


def barrier(t, y0_inf: float, rho: float, f_inf: float):
    return np.maximum(y0_inf - (rho - f_inf) * np.asarray(t, dtype=float), 0.0)


def barrier_margin(times, linf, rho: float, f_inf: float, y0_inf: float) -> float:
    """min over records of barrier(t) - ||y(t)||_inf; >= 0 certifies |y| <= barrier."""
    times = np.asarray(times, dtype=float)
    linf = np.asarray(linf, dtype=float)
    return float(np.min(barrier(times, y0_inf, rho, f_inf) - linf))


def stepwise_barrier_violation(step_linf, y0_inf: float, dt: float, rho: float, f_inf: float) -> float:
    """Largest excess of ||y_{k+1}||_inf over max(||y_k||_inf - dt (rho - f_inf), 0).

    ``step_linf`` holds the sup norm after each step; nonpositive means the
    one-step barrier held at every step.
    """
    s = np.concatenate(([y0_inf], np.asarray(step_linf, dtype=float)))
    allowed = np.maximum(s[:-1] - dt * (rho - f_inf), 0.0)
    if s.size < 2:
        return 0.0
    return float(np.max(s[1:] - allowed))


def lyapunov_envelope_check(traj, beta: float, mu: float, dt: float | None = None):
    """Check V^(mu/2) <= V0^(mu/2) - beta^(1-mu/2) mu t + eps at every unsettled record.

    eps = 1e-6 + 10 dt.  Returns (passed, worst) where worst is the largest
    signed value of lhs - envelope (without eps).
    """
    if dt is None:
        dt = traj.dt
    eps = 1e-6 + 10.0 * dt
    V = np.asarray(traj.V, dtype=float)
    t = np.asarray(traj.times, dtype=float)
    lhs = V ** (mu / 2.0)
    env = V[0] ** (mu / 2.0) - beta ** (1.0 - mu / 2.0) * mu * t
    live = V > 0
    if not np.any(live):
        return True, -math.inf
    worst = float(np.max(lhs[live] - env[live]))
    return worst <= eps, worst


def theta_state_linf(traj, theta: float) -> tuple[float, float]:
    """(t, ||y(t)||_inf) at the last record with t <= theta."""
    if traj.theta_linf is not None:
        return traj.theta_time, traj.theta_linf
    t = np.asarray(traj.times)
    idx = np.flatnonzero(t <= theta * (1 + 1e-12))
    if idx.size == 0:
        raise ValueError(f"no record at or before theta = {theta}")
    i = int(idx[-1])
    return float(t[i]), float(traj.norm_linf[i])


def bound_reports(traj, config=None) -> list[BoundReport]:
    """Bound reports for every settling bound that applies to the run's controller.

    Uses only the recorded series and the configuration, so it can be
    recomputed from trajectory.csv.
    """
    cfg = config if config is not None else traj.config
    ctrl = cfg.control
    reports = []
    if isinstance(ctrl, SignFeedback):
        t_num = detect_settling(traj, 0.0)
        if ctrl.theta == 0:
            tb = bound_theorem2(float(traj.norm_linf[0]), ctrl.rho, cfg.f_inf)
            reports.append(BoundReport.build(THM2_CASE1, tb, t_num))
        else:
            _, y_theta = theta_state_linf(traj, ctrl.theta)
            tb = bound_theorem2_delayed(ctrl.theta, y_theta, ctrl.rho, cfg.f_inf)
            reports.append(BoundReport.build(THM2_CASE2, tb, t_num))
    elif isinstance(ctrl, NonlinearFeedback):
        beta = beta_from_profile(cfg.gain_profile())
        tb = bound_theorem4(float(traj.norm_l2[0]), beta, ctrl.mu)
        reports.append(BoundReport.build(THM4, tb, detect_settling(traj, cfg.settle_tol)))
    return reports


def certificates(traj, config=None) -> dict:
    """Trajectory-level checks that accompany the bound reports."""
    cfg = config if config is not None else traj.config
    ctrl = cfg.control
    out = {}
    if isinstance(ctrl, SignFeedback) and ctrl.theta == 0:
        y0 = float(traj.norm_linf[0])
        out["barrier_margin"] = barrier_margin(traj.times, traj.norm_linf, ctrl.rho, cfg.f_inf, y0)
        if traj.step_linf is not None:
            out["stepwise_barrier_violation"] = stepwise_barrier_violation(
                traj.step_linf, y0, cfg.dt, ctrl.rho, cfg.f_inf)
    elif isinstance(ctrl, NonlinearFeedback):
        beta = beta_from_profile(cfg.gain_profile())
        ok, worst = lyapunov_envelope_check(traj, beta, ctrl.mu, cfg.dt)
        out["lyapunov_envelope_ok"] = ok
        out["lyapunov_worst_violation"] = worst
        out["V_nonincreasing"] = bool(np.all(np.diff(traj.V) <= 0))
    return out
