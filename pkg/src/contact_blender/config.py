"""Run configuration: one TOML (or JSON) document with a flat table per module.

Example::

    seed = 0
    r_values = [0.1, 0.05, 0.02]
    suites = ["chart", "blender"]

    [chart]
    L = 0.5

    [model]
    lam = 0.4

    [blender]
    n_disks = 20
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .chart import ChartParams
from .errors import ConfigError
from .model import ModelParams

SUITES = ("chart", "flows", "model", "cones", "blender", "holonomy", "suspension", "transitivity", "embeddings")


@dataclass(frozen=True)
class FlowSettings:
    blend: str = "quadratic"
    step: float | None = None
    method: str = "fast"


@dataclass(frozen=True)
class BlenderSettings:
    eps: float = 0.25
    grid: int = 32
    rays: int = 64
    n_disks: int = 20
    distinctive_disks: int = 100
    distinctive_iterations: int = 50


@dataclass(frozen=True)
class Tolerances:
    strict_contact: float = 1e-10
    strict_contact_flow: float = 1e-8
    closed_form: float = 1e-8
    holonomy: float = 1e-4
    characteristic: float = 1e-9
    kernel: float = 1e-7
    embedding: float = 1e-9
    r_squared: float = 0.99


@dataclass(frozen=True)
class RunConfig:
    chart: ChartParams = field(default_factory=ChartParams)
    model: ModelParams = field(default_factory=ModelParams)
    flows: FlowSettings = field(default_factory=FlowSettings)
    blender: BlenderSettings = field(default_factory=BlenderSettings)
    tolerances: Tolerances = field(default_factory=Tolerances)
    r_values: tuple = (0.1, 0.05, 0.02)
    suites: tuple = SUITES
    seed: int = 0
    out: str = "."

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = dataclasses.replace(self, **kw)
        validate(cfg)
        return cfg

    def echo(self):
        """Plain dict of every setting, for the report."""
        d = dataclasses.asdict(self)
        d["r_values"] = list(self.r_values)
        d["suites"] = list(self.suites)
        d.pop("out")
        return d


_SECTIONS = {"chart": ChartParams, "model": ModelParams, "flows": FlowSettings,
             "blender": BlenderSettings, "tolerances": Tolerances}
_TOP = {"r_values", "suites", "seed", "out"}


def _build_section(name, cls, table):
    if not isinstance(table, dict):
        raise ConfigError(name, "must be a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    for key in table:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown setting")
    defaults = cls()
    for key, value in table.items():
        expected = type(getattr(defaults, key))
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            continue
        if getattr(defaults, key) is None or expected is type(value):
            continue
        raise ConfigError(f"{name}.{key}", f"expected {expected.__name__}, got {type(value).__name__}")
    return cls(**table)


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a table")
    for key in data:
        if key not in _SECTIONS and key not in _TOP:
            raise ConfigError(key, "unknown setting")
    kw = {name: _build_section(name, cls, data[name]) for name, cls in _SECTIONS.items() if name in data}
    if "r_values" in data:
        rv = data["r_values"]
        if not isinstance(rv, list) or not rv:
            raise ConfigError("r_values", "must be a non-empty list of numbers")
        kw["r_values"] = tuple(float(x) for x in rv)
    if "suites" in data:
        kw["suites"] = tuple(data["suites"])
    if "seed" in data:
        if not isinstance(data["seed"], int) or isinstance(data["seed"], bool):
            raise ConfigError("seed", "must be an integer")
        kw["seed"] = data["seed"]
    if "out" in data:
        kw["out"] = str(data["out"])
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text) if path.suffix == ".json" else tomli.loads(text)
    except (json.JSONDecodeError, tomli.TOMLDecodeError) as exc:
        raise ConfigError("--config", f"cannot parse {path}: {exc}") from exc
    return from_dict(data)


def validate(cfg: RunConfig):
    """Cross-module checks, run before any suite starts."""
    cfg.model.validate(cfg.chart)
    for i, r in enumerate(cfg.r_values):
        if not (0.0 < r <= cfg.model.r_max):
            raise ConfigError(f"r_values[{i}]", f"must lie in (0, r_max={cfg.model.r_max}], got {r!r}")
    for s in cfg.suites:
        if s not in SUITES:
            raise ConfigError("suites", f"unknown suite {s!r}; choose from {', '.join(SUITES)}")
    if cfg.flows.method not in ("fast", "auto", "rk4"):
        raise ConfigError("flows.method", f"must be fast, auto or rk4, got {cfg.flows.method!r}")
    if cfg.flows.step is not None and not cfg.flows.step > 0:
        raise ConfigError("flows.step", "must be positive")
    b = cfg.blender
    if not cfg.model.mu ** 2 > 1 + b.eps ** 2:
        raise ConfigError("blender.eps", "need mu^2 > 1 + eps^2")
    for name in ("grid", "rays", "n_disks", "distinctive_disks", "distinctive_iterations"):
        if getattr(b, name) < 1:
            raise ConfigError(f"blender.{name}", "must be at least 1")
    for f in dataclasses.fields(Tolerances):
        if not getattr(cfg.tolerances, f.name) > 0:
            raise ConfigError(f"tolerances.{f.name}", "must be positive")
    if cfg.seed < 0:
        raise ConfigError("seed", "must be non-negative")
    return cfg
