"""Finite-time stabilization of the 1D heat equation.

Simulates the closed loops under set-valued sign feedback (with bounded
disturbances) and under fractional-power feedback, and checks trajectories
against settling-time bounds, barrier estimates and Lyapunov envelopes.
"""
from ._backend import BACKEND
from .grid import (
    GainProfile, SpatialGrid, StateField, build_grid, inner, norm_l2, norm_linf,
    sample_profile, scalar_grid,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "GainProfile", "SpatialGrid", "StateField", "build_grid", "inner",
    "norm_l2", "norm_linf", "sample_profile", "scalar_grid",
]
