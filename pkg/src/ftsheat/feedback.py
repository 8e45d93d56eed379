"""Control laws, the reaction coefficient and the disturbance signals.

The gain profile a(x) enters in two ways: the sign feedback is divided by a
(so the applied term a*u = -rho*sign(y) does not depend on it), and the
fractional-power feedback acts through B z = sqrt(a) z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .grid import GainProfile, SpatialGrid, StateField, norm_l2


def default_zero_tol(grid: SpatialGrid) -> float:
    return 1e-14 * grid.length


def _check_mu(mu):
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")


@dataclass(frozen=True)
class SignFeedback:
    rho: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not self.theta >= 0:
            raise ValueError(f"theta must be nonnegative, got {self.theta}")


@dataclass(frozen=True)
class NonlinearFeedback:
    mu: float
    zero_tol: float | None = None  # None: default_zero_tol(grid)
    reaction: bool = True

    def __post_init__(self):
        _check_mu(self.mu)
        if self.zero_tol is not None and not self.zero_tol >= 0:
            raise ValueError(f"zero_tol must be nonnegative, got {self.zero_tol}")


@dataclass(frozen=True)
class OpenLoop:
    pass


ControlSpec = Union[SignFeedback, NonlinearFeedback, OpenLoop]


@dataclass(frozen=True)
class ZeroDisturbance:
    def value(self, t: float) -> float:
        return 0.0

    @property
    def sup_bound(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantDisturbance:
    d: float

    def value(self, t: float) -> float:
        return self.d

    @property
    def sup_bound(self) -> float:
        return abs(self.d)


@dataclass(frozen=True)
class SinusoidDisturbance:
    """amplitude * sin(2 pi frequency t + phase)."""

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("sinusoid frequency must be positive (use a constant disturbance otherwise)")

    def value(self, t: float) -> float:
        return self.amplitude * math.sin(2.0 * math.pi * self.frequency * t + self.phase)

    def values(self, t: np.ndarray) -> np.ndarray:
        return self.amplitude * np.sin(2.0 * np.pi * self.frequency * t + self.phase)

    @property
    def sup_bound(self) -> float:
        return abs(self.amplitude)


DisturbanceSpec = Union[ZeroDisturbance, ConstantDisturbance, SinusoidDisturbance]


def disturbance_values(dist: DisturbanceSpec, t: np.ndarray) -> np.ndarray:
    if isinstance(dist, SinusoidDisturbance):
        return dist.values(t)
    return np.full(np.shape(t), dist.value(0.0))


def _profile_for(y: StateField, a: GainProfile) -> np.ndarray:
    if a.grid != y.grid:
        raise ValueError("gain profile and state live on different grids")
    return a.values


def _positive(a: np.ndarray) -> np.ndarray:
    if np.any(a <= 0):
        raise ValueError("gain profile must be positive at every node")
    return a


def sign_gain_control(y: StateField, a: GainProfile, rho: float) -> StateField:
    """Explicit selection -(rho/a) sgn(y) with sgn(0) = 0. Diagnostics only."""
    av = _profile_for(y, a)
    if np.any(av == 0):
        raise ValueError("gain profile vanishes at a node; sign feedback needs a(x) != 0")
    return StateField(-(rho / av) * np.sign(y.values), y.grid)


def delayed_gate(t: float, theta: float) -> bool:
    """True when the delayed sign control is active, i.e. t > theta."""
    return t > theta


def b_star(y: StateField, a: GainProfile) -> StateField:
    return StateField(np.sqrt(_positive(_profile_for(y, a))) * y.values, y.grid)


# B is multiplication by sqrt(a), hence self-adjoint
multiply_by_sqrt_a = b_star


def _s(y: StateField, a: GainProfile) -> float:
    av = _positive(_profile_for(y, a))
    return math.sqrt(y.grid.h * float(np.dot(av * y.values, y.values)))


def nonlinear_control(y: StateField, a: GainProfile, mu: float, zero_tol: float) -> StateField:
    """u = -||B*y||^(-mu) B*y, or 0 when ||B*y|| <= zero_tol."""
    _check_mu(mu)
    by = b_star(y, a)
    s = norm_l2(by)
    if s <= zero_tol:
        return y.grid.zeros()
    # s^(1-mu) times the unit direction: no overflow as s -> 0
    return StateField(-(s ** (1.0 - mu)) * (by.values / s), y.grid)


def g_operator(y: StateField, a: GainProfile, mu: float, zero_tol: float) -> StateField:
    """G(y) = ||B*y||^(-mu) B B* y, zero when ||B*y|| <= zero_tol."""
    _check_mu(mu)
    s = _s(y, a)
    if s <= zero_tol:
        return y.grid.zeros()
    return StateField(s ** (-mu) * a.values * y.values, y.grid)


def reaction_f(y: StateField, a: GainProfile, mu: float, zero_tol: float) -> float:
    """Scalar factor -s^(-mu)/(1 + s^2) of the reaction coefficient, s = ||sqrt(a) y||.

    The reaction term at node i is this scalar times a_i * y_i.
    """
    _check_mu(mu)
    s = _s(y, a)
    if s <= zero_tol:
        return 0.0
    return -(s ** (-mu)) / (1.0 + s * s)


def reaction_term(y: StateField, a: GainProfile, mu: float, zero_tol: float) -> StateField:
    return StateField(reaction_f(y, a, mu, zero_tol) * a.values * y.values, y.grid)
