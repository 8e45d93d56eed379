"""Time integration of the sign and fractional-power closed loops.

Sign loop, one step of length dt (Lie splitting):

    y*   = y + dt * d(t) * shape          disturbance, left endpoint
    y**  = (I - dt Lap_h)^{-1} y*         backward-Euler diffusion
    y'   = shrink(y**, dt * rho)          resolvent of rho*sign, if gated

The set-valued sign is never evaluated; the soft threshold selects
w in sign(y') and zero is reached exactly.  Because the resolvent is an
implicit step, the delay gate is evaluated at the step's end time t + dt.

Fractional-power loop: reaction and control are advanced by an explicit
trapezoid step, followed by backward-Euler diffusion.  Substeps are halved
while any node would be pushed through zero, which keeps ||y|| monotone.
A state whose L2 norm falls to ``settle_tol`` is set to exactly zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ._backend import get_kernels
from .diffusion import diffusion_op, eigenmode
from .errors import ConfigError, NumericalAbort
from .feedback import (
    ConstantDisturbance, ControlSpec, DisturbanceSpec, NonlinearFeedback, OpenLoop,
    SignFeedback, SinusoidDisturbance, ZeroDisturbance, default_zero_tol,
    delayed_gate, disturbance_values, nonlinear_control, sign_gain_control,
)
from .grid import (
    GainProfile, SpatialGrid, StateField, norm_l2, norm_linf, normalize_profile_spec,
    sample_profile,
)
from .trajectory import TrajectoryRecord

DEFAULT_DT = 1e-4
DEFAULT_N = 200
DEFAULT_SETTLE_TOL = 1e-12

INITIAL_KINDS = ("parabola5", "mode", "spike", "constant", "samples")


def shrink(v: float, tau: float) -> float:
    """Soft threshold sgn(v) * max(|v| - tau, 0)."""
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    a = abs(v) - tau
    if a <= 0.0:
        return 0.0
    return a if v > 0 else -a


def normalize_initial_spec(spec) -> dict:
    if isinstance(spec, str):
        spec = {"kind": spec}
    elif not isinstance(spec, Mapping):
        return {"kind": "samples", "values": [float(v) for v in spec]}
    spec = dict(spec)
    kind = spec.get("kind")
    if kind == "parabola5":
        return {"kind": kind}
    if kind == "mode":
        return {"kind": kind, "j": int(spec.get("j", 1)), "amplitude": float(spec.get("amplitude", 1.0))}
    if kind == "spike":
        out = {"kind": kind, "norm": float(spec.get("norm", 1.0))}
        if spec.get("center") is not None:
            out["center"] = float(spec["center"])
        return out
    if kind == "constant":
        return {"kind": kind, "value": float(spec.get("value", 1.0))}
    if kind == "samples":
        return {"kind": kind, "values": [float(v) for v in spec["values"]]}
    raise ValueError(f"unknown initial condition kind {kind!r}; expected one of {INITIAL_KINDS}")


def initial_field(spec, grid: SpatialGrid) -> StateField:
    spec = normalize_initial_spec(spec)
    kind = spec["kind"]
    x = grid.nodes
    if kind == "parabola5":
        return StateField(5.0 * x * (1.0 - x), grid)
    if kind == "mode":
        _, phi = eigenmode(spec["j"], grid)
        return StateField(spec["amplitude"] * phi.values, grid)
    if kind == "spike":
        # one-node spike with prescribed L2 norm
        center = spec.get("center", 0.5 * (grid.x_lo + grid.x_hi))
        v = np.zeros(grid.n_interior)
        v[int(np.argmin(np.abs(x - center)))] = spec["norm"] / math.sqrt(grid.h)
        return StateField(v, grid)
    if kind == "constant":
        return StateField(np.full(grid.n_interior, spec["value"]), grid)
    return StateField(spec["values"], grid)


@dataclass(frozen=True)
class SimConfig:
    grid: SpatialGrid
    t_end: float
    control: ControlSpec
    disturbance: DisturbanceSpec = ZeroDisturbance()
    profile: Any = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    initial: Any = "parabola5"
    dt: float = DEFAULT_DT
    settle_tol: float = DEFAULT_SETTLE_TOL
    record_every: int = 1
    diffusion: bool = True
    disturbance_shape: Any = None  # per-node multiplier of the scalar disturbance; None = 1
    stop_when_settled: bool = True
    snapshot_times: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "profile", normalize_profile_spec(self.profile))
        object.__setattr__(self, "initial", normalize_initial_spec(self.initial))
        if self.disturbance_shape is not None:
            object.__setattr__(self, "disturbance_shape", normalize_profile_spec(self.disturbance_shape))
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if not self.settle_tol > 0:
            raise ConfigError(f"settle_tol must be positive, got {self.settle_tol}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError(f"record_every must be a positive integer, got {self.record_every}")
        try:
            a = self.gain_profile()
            self.initial_state()
            shape = self.shape_values()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if isinstance(self.control, SignFeedback):
            if np.any(a.values == 0):
                raise ConfigError("gain profile vanishes at a node; sign feedback needs a(x) != 0")
            if not self.control.rho > self.f_inf:
                raise ConfigError(
                    f"rho = {self.control.rho:g} must exceed the disturbance sup bound "
                    f"{self.f_inf:g}; the settling bound needs rho > ||f||_inf")
        if isinstance(self.control, NonlinearFeedback):
            if a.inf_bound <= 0:
                raise ConfigError("fractional-power feedback needs a gain profile bounded away from zero (inf a > 0)")
            if not isinstance(self.disturbance, ZeroDisturbance):
                raise ConfigError("the fractional-power closed loop has no additive disturbance; use kind = \"zero\"")
        if shape is not None and not np.all(np.isfinite(shape)):
            raise ConfigError("disturbance shape must be finite")

    def gain_profile(self) -> GainProfile:
        return sample_profile(self.profile, self.grid, positive=isinstance(self.control, NonlinearFeedback))

    def initial_state(self) -> StateField:
        return initial_field(self.initial, self.grid)

    def shape_values(self) -> np.ndarray | None:
        if self.disturbance_shape is None:
            return None
        return sample_profile(self.disturbance_shape, self.grid).values

    @property
    def f_inf(self) -> float:
        """Sup over time and space of the applied disturbance."""
        shape = self.shape_values()
        scale = 1.0 if shape is None else float(np.max(np.abs(shape)))
        return self.disturbance.sup_bound * scale

    @property
    def zero_tol(self) -> float:
        if isinstance(self.control, NonlinearFeedback) and self.control.zero_tol is not None:
            return self.control.zero_tol
        return default_zero_tol(self.grid)

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def detection_tol(self) -> float:
        """Settling tolerance: exact zero for the sign and open loops."""
        return self.settle_tol if isinstance(self.control, NonlinearFeedback) else 0.0


@dataclass
class StepOutcome:
    state: StateField
    selection: StateField | None
    control_l2: float


def _shape_or_ones(shape, n):
    return np.ones(n) if shape is None else np.ascontiguousarray(shape, dtype=float)


def step_sign_closed_loop(y: StateField, t: float, dt: float, rho: float, theta: float,
                          dist: DisturbanceSpec, a: GainProfile | None = None,
                          diffusion: bool = True, shape=None, backend=None) -> StepOutcome:
    """One splitting step of the sign closed loop from t to t + dt."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    k = get_kernels(backend)
    n = y.grid.n_interior
    v = np.array(y.values, dtype=float)
    gate = np.array([delayed_gate(t + dt, theta)], dtype=np.uint8)
    factor = diffusion_op(y.grid, float(dt), k.NAME).factor if diffusion else None
    av = np.ones(n) if a is None else a.values
    cw = np.ascontiguousarray(rho / av)
    sel = np.zeros(n)
    linf, sumsq, ctlsq = np.zeros(1), np.zeros(1), np.zeros(1)
    bad = k.sign_block(v, np.array([dt * dist.value(t)]), _shape_or_ones(shape, n), gate,
                       dt * rho, factor, cw, sel, linf, sumsq, ctlsq)
    if bad >= 0:
        raise NumericalAbort(1, t + dt)
    state = StateField(v, y.grid)
    if not gate[0]:
        return StepOutcome(state, None, 0.0)
    return StepOutcome(state, StateField(sel, y.grid), math.sqrt(y.grid.h * ctlsq[0]))


def step_nonlinear_closed_loop(y: StateField, dt: float, mu: float, a: GainProfile, zero_tol: float,
                               with_reaction: bool = True, settle_tol: float = DEFAULT_SETTLE_TOL,
                               diffusion: bool = True, backend=None) -> StateField:
    """One step of the fractional-power closed loop; see the module docstring."""
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k = get_kernels(backend)
    v = np.array(y.values, dtype=float)
    factor = diffusion_op(y.grid, float(dt), k.NAME).factor if diffusion else None
    bad, _ = k.nonlinear_block(v, np.ascontiguousarray(a.values), 1, float(dt), y.grid.h, float(mu),
                               float(zero_tol), float(settle_tol), bool(with_reaction), factor,
                               np.zeros(1), np.zeros(1), np.zeros(1))
    if bad >= 0:
        raise NumericalAbort(1, dt, "step could not be completed")
    return StateField(v, y.grid)


def scalar_oracle_sign(y0: float, rho: float, d: float, t: float) -> float:
    """Exact solution of y' in -rho sign(y) + d for constant |d| < rho."""
    if not abs(d) < rho:
        raise ValueError(f"oracle needs |d| < rho, got d={d}, rho={rho}")
    if y0 == 0:
        return 0.0
    s = 1.0 if y0 > 0 else -1.0
    return s * max(abs(y0) - (rho - s * d) * t, 0.0)


def scalar_sign_settling_time(y0: float, rho: float, d: float) -> float:
    if not abs(d) < rho:
        raise ValueError(f"oracle needs |d| < rho, got d={d}, rho={rho}")
    if y0 == 0:
        return 0.0
    return abs(y0) / (rho - d * math.copysign(1.0, y0))


def scalar_oracle_nonlinear(y0: float, mu: float, t: float) -> float:
    """Exact solution of y' = -|y|^(-mu) y: |y(t)|^mu = max(|y0|^mu - mu t, 0)."""
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    if y0 == 0:
        return 0.0
    z = abs(y0) ** mu - mu * t
    return math.copysign(z ** (1.0 / mu), y0) if z > 0 else 0.0


def scalar_nonlinear_settling_time(y0: float, mu: float) -> float:
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    return abs(y0) ** mu / mu


CHUNK = 2048


def _step_index(t: float, cfg: SimConfig) -> int:
    return min(cfg.n_steps, max(0, int(round(t / cfg.dt))))


def _theta_step(cfg: SimConfig) -> int | None:
    if isinstance(cfg.control, SignFeedback) and cfg.control.theta > 0:
        return min(cfg.n_steps, int(math.floor(cfg.control.theta / cfg.dt + 1e-9)))
    return None


def simulate(config: SimConfig, backend=None) -> TrajectoryRecord:
    """Run ``config`` from t = 0 to t_end.

    Records are taken every ``record_every`` steps, at the last step, at the
    delay time theta, at snapshot times and at the first step of an
    exact-zero tail, so settling is resolved to one step whatever the
    recording stride.
    """
    k = get_kernels(backend)
    cfg = config
    grid = cfg.grid
    dt = cfg.dt
    n = grid.n_interior
    n_steps = cfg.n_steps
    a = cfg.gain_profile()
    y = np.array(cfg.initial_state().values, dtype=float)
    y0 = y.copy()
    ctrl = cfg.control
    nonlinear = isinstance(ctrl, NonlinearFeedback)
    factor = diffusion_op(grid, float(dt), k.NAME).factor if cfg.diffusion else None

    sumsq = np.zeros(n_steps)
    linf = np.zeros(n_steps)
    aux = np.zeros(n_steps)  # control sum of squares (sign) or ||sqrt(a) y|| (nonlinear)

    snap_steps = sorted({_step_index(t, cfg) for t in cfg.snapshot_times})
    theta_step = _theta_step(cfg)
    breaks = set(range(CHUNK, n_steps, CHUNK)) | set(snap_steps) | {n_steps}
    if theta_step is not None:
        breaks.add(theta_step)
    breaks.discard(0)

    x_full = np.concatenate(([grid.x_lo], grid.nodes, [grid.x_hi]))
    snapshots = []
    theta_time = theta_linf = None

    def capture(step):
        nonlocal theta_time, theta_linf
        if step in snap_steps:
            snapshots.append((step * dt, x_full, np.concatenate(([0.0], y, [0.0]))))
        if step == theta_step:
            theta_time, theta_linf = step * dt, float(np.max(np.abs(y)))

    if nonlinear:
        zero_tol = cfg.zero_tol
        av = np.ascontiguousarray(a.values)
    else:
        rho = ctrl.rho if isinstance(ctrl, SignFeedback) else 0.0
        theta = ctrl.theta if isinstance(ctrl, SignFeedback) else math.inf
        shape = _shape_or_ones(cfg.shape_values(), n)
        cw = np.ascontiguousarray(rho / a.values) if rho > 0 else np.zeros(n)
        sel = np.zeros(n)

    capture(0)
    halvings = 0
    done = 0
    for k1 in sorted(breaks):
        k0 = done
        m = k1 - k0
        if nonlinear:
            bad, nh = k.nonlinear_block(y, av, m, float(dt), grid.h, float(ctrl.mu), float(zero_tol),
                                        float(cfg.settle_tol), bool(ctrl.reaction), factor,
                                        sumsq[k0:k1], linf[k0:k1], aux[k0:k1])
            halvings += nh
            if bad >= 0:
                raise NumericalAbort(k0 + bad + 1, (k0 + bad + 1) * dt,
                                     "non-finite state or step halving budget exhausted")
        else:
            idx = np.arange(k0, k1)
            dvals = np.ascontiguousarray(dt * disturbance_values(cfg.disturbance, idx * dt))
            gate = ((idx + 1) * dt > theta).astype(np.uint8)
            bad = k.sign_block(y, dvals, shape, gate, dt * rho, factor, cw, sel,
                               linf[k0:k1], sumsq[k0:k1], aux[k0:k1])
            if bad >= 0:
                raise NumericalAbort(k0 + bad + 1, (k0 + bad + 1) * dt)
        done = k1
        capture(done)
        if cfg.stop_when_settled and not np.any(y) and _zero_is_absorbing(cfg, done):
            break

    # record steps (step s is the state after s steps; per-step arrays are offset by one)
    steps = set(range(0, done + 1, cfg.record_every)) | {done}
    steps |= {s for s in snap_steps if s <= done}
    if theta_step is not None and theta_step <= done:
        steps.add(theta_step)
    live = np.flatnonzero(linf[:done] != 0.0)
    if np.any(y0) and (live.size == 0 or live[-1] + 1 < done):
        steps.add(int(live[-1]) + 2 if live.size else 1)
    steps = np.array(sorted(steps), dtype=np.int64)

    step_l2 = np.sqrt(grid.h * sumsq[:done])
    if nonlinear:
        s = aux[:done]
        step_ctl = np.where(s > zero_tol, s ** (1.0 - ctrl.mu), 0.0)
        c0 = norm_l2(nonlinear_control(StateField(y0, grid), a, ctrl.mu, zero_tol))
    else:
        step_ctl = np.sqrt(grid.h * aux[:done])
        c0 = norm_l2(sign_gain_control(StateField(y0, grid), a, rho)) if rho > 0 and theta == 0 else 0.0

    later = steps[1:] - 1
    times = steps * dt
    l2 = np.concatenate(([math.sqrt(grid.h * float(np.dot(y0, y0)))], step_l2[later]))
    sup = np.concatenate(([float(np.max(np.abs(y0)))], linf[:done][later]))
    ctl = np.concatenate(([c0], step_ctl[later]))
    traj = TrajectoryRecord(times, l2, sup, l2 * l2, ctl, sup == 0.0,
                            config=cfg, theta_time=theta_time, theta_linf=theta_linf,
                            step_linf=None if nonlinear else linf[:done].copy(),
                            snapshots=snapshots, steps=done, halvings=halvings,
                            final_state=StateField(y, grid))
    from .certify import detect_settling
    traj.settled_at = detect_settling(traj, cfg.detection_tol)
    return traj


def _zero_is_absorbing(cfg: SimConfig, step: int) -> bool:
    if isinstance(cfg.control, NonlinearFeedback) or isinstance(cfg.disturbance, ZeroDisturbance):
        return True
    if isinstance(cfg.control, SignFeedback):
        # every later step is gated and the threshold dt*rho dominates dt*|d|
        return delayed_gate((step + 1) * cfg.dt, cfg.control.theta) and cfg.f_inf < cfg.control.rho
    return False


__all__ = [
    "SimConfig", "StepOutcome", "shrink", "step_sign_closed_loop", "step_nonlinear_closed_loop",
    "simulate", "scalar_oracle_sign", "scalar_oracle_nonlinear", "scalar_sign_settling_time",
    "scalar_nonlinear_settling_time", "initial_field", "SignFeedback", "NonlinearFeedback",
    "OpenLoop", "ConstantDisturbance", "SinusoidDisturbance", "ZeroDisturbance",
]
