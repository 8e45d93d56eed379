"""Run orchestration: single runs, mu sweeps and their output files."""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ._backend import BACKEND
from .certify import THM4, bound_reports, certificates
from .errors import ConfigError
from .config import config_hash, config_to_dict, dump_config
from .feedback import NonlinearFeedback
from .stepper import SimConfig, simulate
from .trajectory import TrajectoryRecord, fmt, write_snapshots_csv, write_trajectory_csv

log = logging.getLogger(__name__)

SWEEP_HEADER = ("mu", "t_numeric", "t_bound_thm4", "satisfied")


@dataclass
class RunSummary:
    config_hash: str
    reports: list
    certificates: dict
    wall_clock: float
    steps: int
    settled_at: float | None
    final_norm_l2: float
    final_norm_linf: float
    backend: str
    config: dict = field(default_factory=dict)

    @property
    def all_satisfied(self) -> bool:
        return all(r["satisfied"] for r in self.reports)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def emit_plot_data(traj: TrajectoryRecord, path) -> Path:
    """trajectory.csv with header t,norm_l2,norm_linf,V,control_l2,settled."""
    return write_trajectory_csv(traj, path)


def run_experiment(config: SimConfig, out_dir, backend=None) -> RunSummary:
    """Simulate ``config`` and write trajectory.csv, snapshots.csv, config.toml, summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    traj = simulate(config, backend=backend)
    wall = time.perf_counter() - t0
    summary = RunSummary(
        config_hash=config_hash(config),
        reports=[r.to_dict() for r in bound_reports(traj)],
        certificates=certificates(traj),
        wall_clock=wall,
        steps=traj.steps,
        settled_at=traj.settled_at,
        final_norm_l2=float(traj.norm_l2[-1]),
        final_norm_linf=float(traj.norm_linf[-1]),
        backend=backend or BACKEND,
        config=config_to_dict(config),
    )
    emit_plot_data(traj, out / "trajectory.csv")
    write_snapshots_csv(traj, out / "snapshots.csv")
    (out / "config.toml").write_text(dump_config(config))
    (out / "summary.json").write_text(summary.to_json() + "\n")
    log.info("run %s: %d steps in %.3fs, settled_at=%s", summary.config_hash[:12], traj.steps,
             wall, traj.settled_at)
    return summary


def _sweep_one(args):
    cfg, out_dir, backend = args
    s = run_experiment(cfg, out_dir, backend)
    thm4 = next(r for r in s.reports if r["theorem"] == THM4)
    return thm4["t_numeric"], thm4["t_bound"], thm4["satisfied"]


class SweepError(RuntimeError):
    def __init__(self, failures):
        self.failures = failures
        super().__init__("; ".join(f"mu={mu}: {err}" for mu, err in failures))


def mu_dirname(mu: float) -> str:
    return f"mu_{mu:g}"


def sweep_mu(base: SimConfig, mus, out_dir, workers: int | None = None, backend=None) -> list[dict]:
    """One fractional-power run per mu, each in its own subdirectory.

    Writes sweep.csv (mu, t_numeric, t_bound_thm4, satisfied).  Failed runs
    leave an empty row; a SweepError listing them is raised after the table
    is written.
    """
    if not isinstance(base.control, NonlinearFeedback):
        raise ValueError("sweep_mu needs a fractional-power (nonlinear) control config")
    mus = [float(m) for m in mus]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for mu in mus:
        try:
            cfg = replace(base, control=replace(base.control, mu=mu))
        except ValueError as exc:
            results.append(ConfigError(str(exc)))
        else:
            results.append((cfg, out / mu_dirname(mu), backend))
    jobs = [i for i, r in enumerate(results) if isinstance(r, tuple)]
    if workers is None:
        workers = min(len(jobs), os.cpu_count() or 1)
    if workers <= 1 or len(jobs) <= 1:
        for i in jobs:
            try:
                results[i] = _sweep_one(results[i])
            except Exception as exc:  # noqa: BLE001
                results[i] = exc
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(_sweep_one, results[i]) for i in jobs}
            for i, fut in futures.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    results[i] = exc
    rows, failures = [], []
    for mu, res in zip(mus, results):
        if isinstance(res, Exception):
            failures.append((mu, res))
            rows.append({"mu": mu, "t_numeric": None, "t_bound_thm4": None, "satisfied": False})
        else:
            t_num, t_bound, ok = res
            rows.append({"mu": mu, "t_numeric": t_num, "t_bound_thm4": t_bound, "satisfied": ok})
    write_sweep_csv(rows, out / "sweep.csv")
    if failures:
        raise SweepError(failures)
    return rows


def write_sweep_csv(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([fmt(r["mu"]),
                        "" if r["t_numeric"] is None else fmt(r["t_numeric"]),
                        "" if r["t_bound_thm4"] is None else fmt(r["t_bound_thm4"]),
                        int(bool(r["satisfied"]))])
    return path
