"""TOML run configuration: parsing, validation and a canonical writer.

Layout (every section and key optional except ``control.kind``)::

    [grid]        n, x_lo, x_hi, diffusion
    [time]        dt, t_end, record_every, settle_tol, stop_when_settled
    [control]     kind = "sign" | "nonlinear" | "open_loop"
                  rho, theta          (sign)
                  mu, zero_tol, reaction   (nonlinear)
    [disturbance] kind = "zero" | "constant" | "sinusoid"
                  value | amplitude, frequency, phase; shape = {profile spec}
    [profile]     kind = "quadratic_plus" | "constant" | "samples" + parameters
    [initial]     kind = "parabola5" | "mode" | "spike" | "constant" | "samples" + parameters
    [output]      snapshot_times = [...]
"""
from __future__ import annotations

import hashlib
import math
import sys
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .feedback import (
    ConstantDisturbance, NonlinearFeedback, OpenLoop, SignFeedback, SinusoidDisturbance,
    ZeroDisturbance,
)
from .grid import SpatialGrid
from .stepper import DEFAULT_DT, DEFAULT_N, DEFAULT_SETTLE_TOL, SimConfig

DEFAULT_T_END = 1.0
DEFAULT_RECORD_EVERY = 10

_KEYS = {
    "grid": {"n", "x_lo", "x_hi", "diffusion"},
    "time": {"dt", "t_end", "record_every", "settle_tol", "stop_when_settled"},
    "control": {"kind", "rho", "theta", "mu", "zero_tol", "reaction"},
    "disturbance": {"kind", "value", "amplitude", "frequency", "phase", "shape"},
    "profile": None,
    "initial": None,
    "output": {"snapshot_times"},
}


def _section(raw: Mapping, name: str) -> dict:
    sec = raw.get(name, {})
    if not isinstance(sec, Mapping):
        raise ConfigError(f"[{name}] must be a table")
    allowed = _KEYS[name]
    if allowed is not None:
        unknown = set(sec) - allowed
        if unknown:
            raise ConfigError(f"[{name}] has unknown keys: {', '.join(sorted(unknown))}")
    return dict(sec)


def _control(sec: dict):
    kind = sec.get("kind")
    if kind == "sign":
        if "rho" not in sec:
            raise ConfigError("[control] kind = \"sign\" needs rho")
        return SignFeedback(float(sec["rho"]), float(sec.get("theta", 0.0)))
    if kind == "nonlinear":
        if "mu" not in sec:
            raise ConfigError("[control] kind = \"nonlinear\" needs mu")
        zt = sec.get("zero_tol")
        return NonlinearFeedback(float(sec["mu"]), None if zt is None else float(zt),
                                 bool(sec.get("reaction", True)))
    if kind == "open_loop":
        return OpenLoop()
    raise ConfigError(f"[control] kind must be sign, nonlinear or open_loop, got {kind!r}")


def _disturbance(sec: dict):
    kind = sec.get("kind", "zero")
    if kind == "zero":
        return ZeroDisturbance()
    if kind == "constant":
        return ConstantDisturbance(float(sec.get("value", 0.0)))
    if kind == "sinusoid":
        return SinusoidDisturbance(float(sec["amplitude"]), float(sec["frequency"]),
                                   float(sec.get("phase", 0.0)))
    raise ConfigError(f"[disturbance] kind must be zero, constant or sinusoid, got {kind!r}")


def config_from_dict(raw: Mapping, overrides: Mapping | None = None) -> SimConfig:
    """Build a validated SimConfig; ``overrides`` may set dt, n, t_end."""
    unknown = set(raw) - set(_KEYS)
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    grid_s, time_s = _section(raw, "grid"), _section(raw, "time")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if "n" in overrides:
        grid_s["n"] = overrides["n"]
    if "dt" in overrides:
        time_s["dt"] = overrides["dt"]
    if "t_end" in overrides:
        time_s["t_end"] = overrides["t_end"]
    try:
        grid = SpatialGrid(int(grid_s.get("n", DEFAULT_N)), float(grid_s.get("x_lo", 0.0)),
                           float(grid_s.get("x_hi", 1.0)))
        dist_s = _section(raw, "disturbance")
        return SimConfig(
            grid=grid,
            t_end=float(time_s.get("t_end", DEFAULT_T_END)),
            control=_control(_section(raw, "control")),
            disturbance=_disturbance(dist_s),
            profile=_section(raw, "profile") or {"kind": "constant", "value": 1.0},
            initial=_section(raw, "initial") or {"kind": "parabola5"},
            dt=float(time_s.get("dt", DEFAULT_DT)),
            settle_tol=float(time_s.get("settle_tol", DEFAULT_SETTLE_TOL)),
            record_every=int(time_s.get("record_every", DEFAULT_RECORD_EVERY)),
            diffusion=bool(grid_s.get("diffusion", True)),
            disturbance_shape=dist_s.get("shape"),
            stop_when_settled=bool(time_s.get("stop_when_settled", True)),
            snapshot_times=tuple(_section(raw, "output").get("snapshot_times", ())),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def loads_config(text: str, overrides: Mapping | None = None, source: str = "<string>") -> SimConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # message carries "(at line L, column C)"
        raise ConfigError(f"{source}: {exc}") from exc
    try:
        return config_from_dict(raw, overrides)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path, overrides: Mapping | None = None) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return loads_config(text, overrides, source=str(path))


def config_to_dict(cfg: SimConfig) -> dict:
    ctrl = cfg.control
    if isinstance(ctrl, SignFeedback):
        control = {"kind": "sign", "rho": ctrl.rho, "theta": ctrl.theta}
    elif isinstance(ctrl, NonlinearFeedback):
        control = {"kind": "nonlinear", "mu": ctrl.mu, "reaction": ctrl.reaction}
        if ctrl.zero_tol is not None:
            control["zero_tol"] = ctrl.zero_tol
    else:
        control = {"kind": "open_loop"}
    dist = cfg.disturbance
    if isinstance(dist, ConstantDisturbance):
        disturbance = {"kind": "constant", "value": dist.d}
    elif isinstance(dist, SinusoidDisturbance):
        disturbance = {"kind": "sinusoid", "amplitude": dist.amplitude,
                       "frequency": dist.frequency, "phase": dist.phase}
    else:
        disturbance = {"kind": "zero"}
    if cfg.disturbance_shape is not None:
        disturbance["shape"] = dict(cfg.disturbance_shape)
    return {
        "grid": {"n": cfg.grid.n_interior, "x_lo": cfg.grid.x_lo, "x_hi": cfg.grid.x_hi,
                 "diffusion": cfg.diffusion},
        "time": {"dt": cfg.dt, "t_end": cfg.t_end, "record_every": cfg.record_every,
                 "settle_tol": cfg.settle_tol, "stop_when_settled": cfg.stop_when_settled},
        "control": control,
        "disturbance": disturbance,
        "profile": dict(cfg.profile),
        "initial": dict(cfg.initial),
        "output": {"snapshot_times": list(cfg.snapshot_times)},
    }


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ConfigError(f"cannot write non-finite value {v}")
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, Mapping):
        return "{ " + ", ".join(f"{k} = {_toml_value(x)}" for k, x in v.items()) + " }"
    raise ConfigError(f"cannot write value of type {type(v).__name__}")


def dump_config(cfg: SimConfig) -> str:
    """Canonical TOML text; every default is written out."""
    lines = []
    for section, table in config_to_dict(cfg).items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {_toml_value(v)}" for k, v in table.items())
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg: SimConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()
