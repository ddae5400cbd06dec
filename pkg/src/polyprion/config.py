"""Simulation configuration: INI-style key-value files mapped onto dataclasses.

Sections and keys (all optional; defaults reproduce the brain-slice setup)::

    [mesh]     trimesh, partition, n_target, preserve_labels, seed
    [model]    kind (heterodimer | fk), degree, eta0, alpha (table | derived)
    [white]    d_ext, d_axn, and k0 k12 k1 k1_tilde (heterodimer) or alpha (fk)
    [grey]     same keys as [white]
    [time]     dt, T, checkpoints (auto: every 5 up to T), sample_interval
    [initial]  p0 (healthy | number), q0, seed_center, seed_radius,
               seed_amplitude, seed_width
    [output]   dir, vtk, svg, threshold
    [solver]   method (auto | direct), tol, threads

`trimesh` is a file path or one of ``builtin:brain`` and ``builtin:square:N``.
`partition` is a file path, ``cells`` (pair the triangles of each grid cell)
or empty.  Overrides use ``section.key=value``.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .models import FKParams, HeterodimerParams


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


def _floats(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    t = str(text).strip().lower()
    return None if t in ("", "auto", "default", "none") else float(t)


def _opt_int(text):
    t = str(text).strip().lower()
    return None if t in ("", "none") else int(t)


def _opt_pair(text):
    t = str(text).strip().lower()
    if t in ("", "auto", "default", "none"):
        return None
    v = _floats(t)
    if len(v) != 2:
        raise ValueError("expected two numbers")
    return v


def _opt_floats(text):
    t = str(text).strip().lower()
    return None if t in ("", "auto", "default", "none") else _floats(t)


def _p0(text):
    t = str(text).strip().lower()
    return "healthy" if t == "healthy" else float(t)


@dataclass
class MeshConfig:
    trimesh: str = "builtin:brain"
    partition: str = ""
    n_target: int | None = 534
    preserve_labels: bool = True
    seed: int = 0


@dataclass
class ModelConfig:
    kind: str = "heterodimer"
    degree: int = 6
    eta0: float = 10.0
    alpha: str = "table"


@dataclass
class TimeConfig:
    dt: float = 0.01
    T: float = 25.0
    checkpoints: tuple | None = None
    sample_interval: float = 0.25

    def checkpoint_times(self):
        """Explicit checkpoints, or every 5 time units up to T plus T itself."""
        if self.checkpoints is not None:
            return tuple(self.checkpoints)
        n = int(self.T // 5.0 + 1e-9)
        return tuple(sorted({5.0 * i for i in range(n + 1)} | {float(self.T)}))


@dataclass
class InitialConfig:
    p0: object = "healthy"
    q0: float = 0.0
    seed_center: tuple | None = None
    seed_radius: float = 0.006
    seed_amplitude: float | None = None
    seed_width: float | None = None


@dataclass
class OutputConfig:
    dir: str = "run"
    vtk: bool = True
    svg: bool = True
    threshold: float | None = None


@dataclass
class SolverConfig:
    method: str = "auto"
    tol: float = 1e-10
    threads: int = 0


_PARSERS = {
    ("mesh", "n_target"): _opt_int, ("mesh", "preserve_labels"): _bool, ("mesh", "seed"): int,
    ("model", "degree"): int, ("model", "eta0"): float,
    ("time", "dt"): float, ("time", "T"): float, ("time", "checkpoints"): _opt_floats,
    ("time", "sample_interval"): float,
    ("initial", "p0"): _p0, ("initial", "q0"): float, ("initial", "seed_center"): _opt_pair,
    ("initial", "seed_radius"): float, ("initial", "seed_amplitude"): _opt_float,
    ("initial", "seed_width"): _opt_float,
    ("output", "vtk"): _bool, ("output", "svg"): _bool, ("output", "threshold"): _opt_float,
    ("solver", "tol"): float, ("solver", "threads"): int,
}

_SECTIONS = {"mesh": MeshConfig, "model": ModelConfig, "time": TimeConfig,
             "initial": InitialConfig, "output": OutputConfig, "solver": SolverConfig}

HD_KEYS = ("d_ext", "d_axn", "k0", "k12", "k1", "k1_tilde")
FK_KEYS = ("d_ext", "d_axn", "alpha")


@dataclass
class SimulationConfig:
    mesh: MeshConfig = field(default_factory=MeshConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    white: dict = field(default_factory=dict)
    grey: dict = field(default_factory=dict)
    time: TimeConfig = field(default_factory=TimeConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def heterodimer_params(self) -> HeterodimerParams:
        base = HeterodimerParams.defaults()
        if self.model.kind != "heterodimer":
            return base
        return HeterodimerParams(replace(base.white, **self.white), replace(base.grey, **self.grey))

    def params(self):
        if self.model.kind == "heterodimer":
            return self.heterodimer_params()
        base = FKParams.defaults() if self.model.alpha == "table" else \
            FKParams.from_heterodimer(HeterodimerParams.defaults())
        return FKParams(replace(base.white, **self.white), replace(base.grey, **self.grey))

    def validate(self):
        problems = []
        if self.model.kind not in ("heterodimer", "fk"):
            problems.append(f"model.kind must be heterodimer or fk, got {self.model.kind!r}")
        if self.model.alpha not in ("table", "derived"):
            problems.append("model.alpha must be table or derived")
        if not 1 <= self.model.degree <= 12:
            problems.append("model.degree must be in 1..12")
        if self.model.eta0 <= 0:
            problems.append("model.eta0 must be positive")
        keys = HD_KEYS if self.model.kind == "heterodimer" else FK_KEYS
        for name in ("white", "grey"):
            for k, v in getattr(self, name).items():
                if k not in keys:
                    problems.append(f"{name}.{k} is not a parameter of the {self.model.kind} model")
                elif not isinstance(v, float):
                    problems.append(f"{name}.{k} must be a number")
        if not problems:
            try:
                self.params().validate()
            except ValueError as exc:
                problems.append(str(exc))
        t = self.time
        if t.dt <= 0:
            problems.append("time.dt must be positive")
        if t.T < 0:
            problems.append("time.T must be non-negative")
        if t.dt > 0 and t.T >= 0:
            n = round(t.T / t.dt)
            if abs(n * t.dt - t.T) > 1e-9 * max(1.0, t.T):
                problems.append("time.T must be a multiple of time.dt")
            for c in t.checkpoint_times():
                if c < 0 or c > t.T + 1e-12:
                    problems.append(f"checkpoint {c} outside [0, T]")
                elif abs(round(c / t.dt) * t.dt - c) > 1e-9 * max(1.0, c):
                    problems.append(f"checkpoint {c} is not a multiple of dt")
            if t.sample_interval <= 0 or abs(round(t.sample_interval / t.dt) * t.dt - t.sample_interval) > 1e-9:
                problems.append("time.sample_interval must be a positive multiple of dt")
        if self.mesh.n_target is not None and self.mesh.n_target < 1:
            problems.append("mesh.n_target must be positive")
        if not self.mesh.trimesh.startswith("builtin:") and not Path(self.mesh.trimesh).is_file():
            problems.append(f"mesh.trimesh: no such file {self.mesh.trimesh}")
        part = self.mesh.partition
        if part and part != "cells" and not Path(part).is_file():
            problems.append(f"mesh.partition: no such file {part}")
        ini = self.initial
        if ini.seed_radius <= 0:
            problems.append("initial.seed_radius must be positive")
        if ini.seed_width is not None and ini.seed_width <= 0:
            problems.append("initial.seed_width must be positive")
        if self.solver.method not in ("auto", "direct"):
            problems.append("solver.method must be auto or direct")
        if self.solver.tol <= 0:
            problems.append("solver.tol must be positive")
        if self.solver.threads < 0:
            problems.append("solver.threads must be >= 0")
        if problems:
            raise ConfigError(problems)
        return self

    def threads(self):
        return self.solver.threads or os.cpu_count() or 1


def _parse_into(cfg: SimulationConfig, section, key, value, problems, origin):
    if section in ("white", "grey"):
        try:
            getattr(cfg, section)[key] = float(value)
        except ValueError:
            problems.append(f"{origin}{section}.{key}: not a number: {value!r}")
        return
    cls = _SECTIONS.get(section)
    if cls is None:
        problems.append(f"{origin}unknown section [{section}]")
        return
    names = {f.name for f in fields(cls)}
    if key not in names:
        problems.append(f"{origin}unknown key {section}.{key}")
        return
    conv = _PARSERS.get((section, key), str)
    try:
        setattr(getattr(cfg, section), key, conv(value))
    except (ValueError, TypeError) as exc:
        problems.append(f"{origin}{section}.{key}: {exc}")


def load_config(path=None, overrides=(), *, text=None) -> SimulationConfig:
    """Read a config file (or string), apply `section.key=value` overrides, validate."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    problems = []
    base = None
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError([f"cannot read {path}: {exc}"]) from exc
        base = Path(path).resolve().parent
    if text is not None:
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError([str(exc)]) from exc
    cfg = SimulationConfig()
    for section in cp.sections():
        for key, value in cp.items(section):
            _parse_into(cfg, section, key, value, problems, "")
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            problems.append(f"override {item!r} is not of the form section.key=value")
            continue
        lhs, value = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        _parse_into(cfg, section, key, value.strip(), problems, "override ")
    if base is not None:
        cfg.mesh.trimesh = _resolve(cfg.mesh.trimesh, base)
        if cfg.mesh.partition not in ("", "cells"):
            cfg.mesh.partition = _resolve(cfg.mesh.partition, base)
    if problems:
        raise ConfigError(problems)
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(problems + exc.problems) from None


def _resolve(p, base):
    if p.startswith("builtin:") or os.path.isabs(p):
        return p
    return str((base / p).resolve())


def _fmt(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def dump_config(cfg: SimulationConfig) -> str:
    """Complete INI text; loading it gives back an equal configuration."""
    out = []
    for section in ("mesh", "model"):
        out.append(f"[{section}]")
        out += [f"{k} = {_fmt(v)}" for k, v in asdict(getattr(cfg, section)).items()]
        out.append("")
    params = cfg.params()
    for name in ("white", "grey"):
        out.append(f"[{name}]")
        out += [f"{k} = {v!r}" for k, v in asdict(getattr(params, name)).items()]
        out.append("")
    for section in ("time", "initial", "output", "solver"):
        out.append(f"[{section}]")
        out += [f"{k} = {_fmt(v)}" for k, v in asdict(getattr(cfg, section)).items()]
        out.append("")
    return "\n".join(out)


__all__ = ["ConfigError", "SimulationConfig", "MeshConfig", "ModelConfig", "TimeConfig", "InitialConfig",
           "OutputConfig", "SolverConfig", "load_config", "dump_config"]
