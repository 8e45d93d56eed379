"""Recorded time series of a simulation and its CSV form."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

TRAJECTORY_HEADER = ("t", "norm_l2", "norm_linf", "V", "control_l2", "settled")
SNAPSHOT_HEADER = ("t", "x", "y")


def fmt(v: float) -> str:
    return repr(float(v))  # shortest string that round-trips exactly


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    norm_l2: np.ndarray
    norm_linf: np.ndarray
    V: np.ndarray
    control_l2: np.ndarray
    settled: np.ndarray
    config: Any = None
    settled_at: float | None = None
    # state norm at the last step time <= theta (delayed sign control)
    theta_time: float | None = None
    theta_linf: float | None = None
    step_linf: np.ndarray | None = None  # per-step sup norm, sign/open loop only
    snapshots: list = field(default_factory=list)  # (t, nodes, values)
    steps: int = 0
    halvings: int = 0
    final_state: Any = None

    def __post_init__(self):
        for name in ("times", "norm_l2", "norm_linf", "V", "control_l2"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.settled = np.asarray(self.settled, dtype=bool)
        n = self.times.shape[0]
        for name in ("norm_l2", "norm_linf", "V", "control_l2", "settled"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"series {name} is not aligned with times")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("record times must be strictly increasing")

    def __len__(self):
        return self.times.shape[0]

    @property
    def dt(self) -> float | None:
        return getattr(self.config, "dt", None)


def write_trajectory_csv(traj: TrajectoryRecord, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for i in range(len(traj)):
            w.writerow([fmt(traj.times[i]), fmt(traj.norm_l2[i]), fmt(traj.norm_linf[i]),
                        fmt(traj.V[i]), fmt(traj.control_l2[i]), int(traj.settled[i])])
    return path


def read_trajectory_csv(path, config=None) -> TrajectoryRecord:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRAJECTORY_HEADER:
        raise ValueError(f"{path}: unexpected header {rows[0] if rows else None}")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, 6)
    return TrajectoryRecord(data[:, 0], data[:, 1], data[:, 2], data[:, 3], data[:, 4],
                            data[:, 5] != 0, config=config)


def write_snapshots_csv(traj: TrajectoryRecord, path) -> Path:
    """State profiles including the zero boundary values, one row per node."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_HEADER)
        for t, x, y in traj.snapshots:
            for xi, yi in zip(x, y):
                w.writerow([fmt(t), fmt(xi), fmt(yi)])
    return path
