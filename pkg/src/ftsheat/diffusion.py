"""Dirichlet Laplacian on a uniform grid: stencil, backward-Euler solve, eigenmodes."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ._backend import get_kernels
from .grid import SpatialGrid, StateField


def laplacian_values(v: np.ndarray, h: float) -> np.ndarray:
    """3-point stencil with zero ghost values at both ends."""
    out = -2.0 * v
    out[1:] += v[:-1]
    out[:-1] += v[1:]
    return out / (h * h)


def apply_laplacian(y: StateField) -> StateField:
    return StateField(laplacian_values(y.values, y.grid.h), y.grid)


class ImplicitDiffusionOp:
    """Cached factorization of (I - dt * Lap_h) for one grid and time step."""

    def __init__(self, grid: SpatialGrid, dt: float, backend: str | None = None):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.grid = grid
        self.dt = float(dt)
        self.kernels = get_kernels(backend)
        self.factor = self.kernels.factor_diffusion(grid.n_interior, self.dt / grid.h**2)

    def solve_values(self, rhs: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        return self.kernels.solve_diffusion(self.factor, np.ascontiguousarray(rhs, dtype=float), out)

    def __call__(self, rhs: StateField) -> StateField:
        if rhs.grid != self.grid:
            raise ValueError("grid mismatch")
        return StateField(self.solve_values(rhs.values), self.grid)

    def matrix(self) -> np.ndarray:
        """Dense (I - dt * Lap_h); for tests and small diagnostics only."""
        n = self.grid.n_interior
        r = self.dt / self.grid.h**2
        return (np.diag(np.full(n, 1 + 2 * r)) + np.diag(np.full(n - 1, -r), 1)
                + np.diag(np.full(n - 1, -r), -1))


@lru_cache(maxsize=64)
def diffusion_op(grid: SpatialGrid, dt: float, backend: str | None = None) -> ImplicitDiffusionOp:
    return ImplicitDiffusionOp(grid, dt, backend)


def solve_implicit_diffusion(rhs: StateField, dt: float, backend: str | None = None) -> StateField:
    return diffusion_op(rhs.grid, float(dt), backend)(rhs)


def _check_unit_domain(grid: SpatialGrid):
    if grid.x_lo != 0.0 or grid.x_hi != 1.0:
        raise ValueError(f"eigenmodes are tabulated for the unit interval, not ({grid.x_lo}, {grid.x_hi})")


def eigenmode(j: int, grid: SpatialGrid) -> tuple[float, StateField]:
    """Continuous eigenpair -(j pi)^2, sqrt(2) sin(j pi x) sampled on ``grid``."""
    _check_unit_domain(grid)
    if int(j) != j or not 1 <= j <= grid.n_interior:
        raise ValueError(f"mode index must be in 1..{grid.n_interior}, got {j}")
    lam = -((j * math.pi) ** 2)
    return lam, StateField(math.sqrt(2.0) * np.sin(j * math.pi * grid.nodes), grid)


def discrete_eigenvalue(j: int, grid: SpatialGrid) -> float:
    """Eigenvalue of the 3-point stencil for mode j: -(4/h^2) sin^2(j pi h / 2)."""
    _check_unit_domain(grid)
    h = grid.h
    return -(4.0 / h**2) * math.sin(j * math.pi * h / 2.0) ** 2
