"""Uniform 1D grids, state fields and the discrete norms used everywhere else.

Only interior nodes are stored; the Dirichlet boundary values are zero and
implicit.  Quadrature is the composite midpoint rule (weight ``h`` per node).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    n_interior: int
    x_lo: float = 0.0
    x_hi: float = 1.0

    def __post_init__(self):
        if int(self.n_interior) != self.n_interior or self.n_interior < 1:
            raise ValueError(f"n_interior must be a positive integer, got {self.n_interior!r}")
        if not (np.isfinite(self.x_lo) and np.isfinite(self.x_hi)) or self.x_hi <= self.x_lo:
            raise ValueError(f"degenerate interval ({self.x_lo}, {self.x_hi})")

    @property
    def h(self) -> float:
        return (self.x_hi - self.x_lo) / (self.n_interior + 1)

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def nodes(self) -> np.ndarray:
        i = np.arange(1, self.n_interior + 1)
        return self.x_lo + i * self.h

    def field(self, values) -> "StateField":
        return StateField(values, self)

    def zeros(self) -> "StateField":
        return StateField(np.zeros(self.n_interior), self)


def build_grid(n_interior: int, x_lo: float = 0.0, x_hi: float = 1.0) -> SpatialGrid:
    return SpatialGrid(n_interior, float(x_lo), float(x_hi))


def scalar_grid() -> SpatialGrid:
    """Single node at x = 0 with unit weight, so field norms equal |y|."""
    return SpatialGrid(1, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class StateField:
    values: np.ndarray
    grid: SpatialGrid

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if v.shape[0] != self.grid.n_interior:
            raise ValueError(f"field has {v.shape[0]} values, grid has {self.grid.n_interior} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]

    def __repr__(self):
        return f"StateField(n={len(self)}, linf={norm_linf(self):.6g})"


def _check_same_grid(y: StateField, z: StateField):
    if y.grid != z.grid:
        raise ValueError(f"grid mismatch: {y.grid} vs {z.grid}")


def norm_l2(y: StateField) -> float:
    return float(np.sqrt(y.grid.h * np.dot(y.values, y.values)))


def norm_linf(y: StateField) -> float:
    return float(np.max(np.abs(y.values)))


def inner(y: StateField, z: StateField) -> float:
    _check_same_grid(y, z)
    return float(y.grid.h * np.dot(y.values, z.values))


@dataclass(frozen=True, eq=False)
class GainProfile:
    """Samples of a(x) at interior nodes.

    ``analytic_inf`` is the infimum of a over the open interval when it is
    known in closed form (builtin profiles); ``inf_bound`` is always the
    node minimum.
    """

    values: np.ndarray
    grid: SpatialGrid
    analytic_inf: float | None = None
    spec: Mapping | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if v.shape[0] != self.grid.n_interior:
            raise ValueError(f"profile has {v.shape[0]} values, grid has {self.grid.n_interior} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def inf_bound(self) -> float:
        return float(np.min(self.values))


ProfileSpec = Union[Mapping, Sequence[float], float, Callable[[np.ndarray], np.ndarray]]

BUILTIN_PROFILES = ("quadratic_plus", "constant", "samples")


def _quadratic_plus_inf(scale: float, offset: float, grid: SpatialGrid) -> float:
    # inf of scale*x**2 + offset over the open interval (x_lo, x_hi)
    if scale >= 0:
        if grid.x_lo < 0.0 < grid.x_hi:
            return offset
        x = min(abs(grid.x_lo), abs(grid.x_hi))
        return scale * x * x + offset
    x = max(abs(grid.x_lo), abs(grid.x_hi))
    return scale * x * x + offset


def normalize_profile_spec(expr: ProfileSpec) -> dict:
    """Canonical dict form of a profile spec (what the config file stores)."""
    if isinstance(expr, Mapping):
        spec = dict(expr)
        kind = spec.get("kind")
        if kind == "quadratic_plus":
            return {"kind": kind, "scale": float(spec.get("scale", 1.0)),
                    "offset": float(spec.get("offset", 0.01))}
        if kind == "constant":
            return {"kind": kind, "value": float(spec.get("value", 1.0))}
        if kind == "samples":
            return {"kind": kind, "values": [float(v) for v in spec["values"]]}
        raise ValueError(f"unknown profile kind {kind!r}; expected one of {BUILTIN_PROFILES}")
    if isinstance(expr, (int, float)):
        return {"kind": "constant", "value": float(expr)}
    if callable(expr):
        raise TypeError("callable profiles have no canonical config form")
    return {"kind": "samples", "values": [float(v) for v in expr]}


def sample_profile(expr: ProfileSpec, grid: SpatialGrid, positive: bool = False) -> GainProfile:
    """Sample a gain profile at the interior nodes.

    ``positive=True`` declares the profile as a nonlinear-controller gain and
    rejects any nonpositive sample.
    """
    x = grid.nodes
    analytic_inf = None
    spec = None
    if callable(expr) and not isinstance(expr, Mapping):
        values = np.broadcast_to(np.asarray(expr(x), dtype=float), x.shape)
    else:
        spec = normalize_profile_spec(expr)
        kind = spec["kind"]
        if kind == "quadratic_plus":
            values = spec["scale"] * x**2 + spec["offset"]
            analytic_inf = _quadratic_plus_inf(spec["scale"], spec["offset"], grid)
        elif kind == "constant":
            values = np.full_like(x, spec["value"])
            analytic_inf = spec["value"]
        else:
            values = np.asarray(spec["values"], dtype=float)
    profile = GainProfile(values, grid, analytic_inf, spec)
    if positive and profile.inf_bound <= 0:
        raise ValueError(f"gain profile must be positive, node minimum is {profile.inf_bound:g}")
    return profile
