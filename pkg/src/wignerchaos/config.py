"""YAML run configuration: parsing with line-attributed errors, presets and
construction of the simulation objects.
"""
from __future__ import annotations

import copy
import dataclasses
import math
import os
import typing
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Optional, Tuple

import yaml

from . import diagnostics
from .evolution import Bracket, EnvironmentParams, EvolutionConfig, max_stable_dt
from .phase_space import GaussianSpec, PhaseSpaceGrid, WignerField, make_cat, make_gaussian
from .potentials import PotentialSpec, min_nonlinearity_scale, nonlinearity_scale, UndefinedScaleError

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "preset_names", "preset_text"]

PRESETS = ("harmonic", "inverted_oscillator", "double_well_driven", "cat_decoherence")


class ConfigError(ValueError):
    """Invalid configuration; the message names the line and field."""


@dataclass
class GridBlock:
    nx: int = 256
    np: int = 256
    x_extent: Tuple[float, float] = (-10.0, 10.0)
    p_extent: Optional[Tuple[float, float]] = None


@dataclass
class StateBlock:
    kind: str = "gaussian"
    x0: float = 0.0
    p0: float = 0.0
    sigma_x: Optional[float] = None
    sigma_p: Optional[float] = None
    correlation: float = 0.0
    x_sep: float = 0.0


@dataclass
class DriveBlock:
    amplitude: float = 0.0
    frequency: float = 0.0


@dataclass
class PotentialBlock:
    coefficients: List[float] = field(default_factory=lambda: [0.0])
    drive: DriveBlock = field(default_factory=DriveBlock)


@dataclass
class EnvironmentBlock:
    gamma: float = 0.0
    temperature: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0
    diffusion: Optional[float] = None


@dataclass
class EvolutionBlock:
    dt: Optional[float] = None
    t_max: float = 10.0
    bracket: str = "moyal_exact"
    friction: bool = False
    snapshot_stride: int = 0
    diagnostics_stride: int = 10
    edge_tol: float = 1e-5
    norm_tol: float = 1e-4


@dataclass
class LyapunovBlock:
    method: str = "benettin"
    value: Optional[float] = None
    x0: Optional[float] = None
    p0: Optional[float] = None
    dt: float = 1e-3
    t_total: float = 1000.0
    renorm_stride: int = 10
    transient: float = 0.0
    fixture: str = "double_well_lyapunov"


@dataclass
class DiagnosticsBlock:
    smoothing_window: Optional[float] = None
    t_start: Optional[float] = None
    t_end: Optional[float] = None
    dynamical_time: Optional[float] = None
    min_dynamical_times: float = 5.0
    ratio_band: Tuple[float, float] = (0.5, 1.5)
    alpha_target: float = -1.0
    alpha_tol: float = 0.3
    alpha_min: float = 0.3
    improvement_ratio: float = 0.5
    constant_tol: float = 0.15
    saturation_fraction: float = 0.9
    entropy: str = "von_neumann"
    delta_x: Optional[float] = None
    lyapunov: LyapunovBlock = field(default_factory=LyapunovBlock)


@dataclass
class OutputBlock:
    directory: Optional[str] = None
    snapshots: bool = False
    marginals: bool = True


@dataclass
class RunConfig:
    name: str = "run"
    grid: GridBlock = field(default_factory=GridBlock)
    state: StateBlock = field(default_factory=StateBlock)
    potential: PotentialBlock = field(default_factory=PotentialBlock)
    environment: EnvironmentBlock = field(default_factory=EnvironmentBlock)
    evolution: EvolutionBlock = field(default_factory=EvolutionBlock)
    diagnostics: DiagnosticsBlock = field(default_factory=DiagnosticsBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, tuple):
                return list(v)
            return v
        return _map_values(dataclasses.asdict(self), conv)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def with_value(self, dotted: str, value) -> "RunConfig":
        d = self.to_dict()
        node = d
        keys = dotted.split(".")
        for k in keys[:-1]:
            node = node[k]
        node[keys[-1]] = value
        return _from_dict(d, {})

    # object construction

    def build_grid(self) -> PhaseSpaceGrid:
        g = self.grid
        return PhaseSpaceGrid(g.nx, g.np, tuple(g.x_extent),
                              None if g.p_extent is None else tuple(g.p_extent), self.environment.hbar)

    def build_potential(self) -> PotentialSpec:
        p = self.potential
        return PotentialSpec(tuple(p.coefficients), p.drive.amplitude, p.drive.frequency, self.environment.mass)

    def build_environment(self) -> EnvironmentParams:
        e = self.environment
        return EnvironmentParams(e.gamma, e.temperature, e.mass, e.hbar, e.diffusion)

    def gaussian_spec(self) -> GaussianSpec:
        s = self.state
        hbar = self.environment.hbar
        sx, sp = s.sigma_x, s.sigma_p
        if sx is None and sp is None:
            sx = sp = math.sqrt(hbar / 2)
        elif sx is None:
            sx = math.sqrt(hbar**2 / 4 + s.correlation**2) / sp
        elif sp is None:
            sp = math.sqrt(hbar**2 / 4 + s.correlation**2) / sx
        return GaussianSpec(s.x0, s.p0, sx, sp, s.correlation)

    def build_state(self, grid: Optional[PhaseSpaceGrid] = None) -> WignerField:
        grid = grid or self.build_grid()
        spec = self.gaussian_spec()
        if self.state.kind == "cat":
            return make_cat(self.state.x_sep, spec, grid)
        return make_gaussian(spec, grid)

    def build_evolution(self, spec: Optional[PotentialSpec] = None, grid: Optional[PhaseSpaceGrid] = None) -> EvolutionConfig:
        ev = self.evolution
        dt = ev.dt
        if dt is None:
            spec = spec or self.build_potential()
            grid = grid or self.build_grid()
            dt = min(max_stable_dt(spec, grid, ev.bracket, 4.0), 0.01)
        return EvolutionConfig(dt, ev.t_max, Bracket.parse(ev.bracket), ev.friction, ev.snapshot_stride,
                               ev.diagnostics_stride, True, ev.edge_tol, ev.norm_tol)

    def fit_config(self, **override) -> diagnostics.FitConfig:
        d = self.diagnostics
        kw = dict(
            smoothing_window=d.smoothing_window, t_start=d.t_start, t_end=d.t_end,
            dynamical_time=d.dynamical_time, min_dynamical_times=d.min_dynamical_times,
            ratio_band=tuple(d.ratio_band), alpha_target=d.alpha_target, alpha_tol=d.alpha_tol,
            alpha_min=d.alpha_min, improvement_ratio=d.improvement_ratio, constant_tol=d.constant_tol,
            saturation_fraction=d.saturation_fraction, which=d.entropy,
        )
        kw.update(override)
        return diagnostics.FitConfig(**kw)

    def nonlinearity(self) -> Tuple[float, float]:
        """(chi_1 at the initial centroid, min chi_1 over +-3 sigma_x around it)."""
        spec = self.build_potential()
        g = self.gaussian_spec()
        x0 = g.x0
        try:
            chi = nonlinearity_scale(spec, 1, x0, 0.0)
        except UndefinedScaleError:
            chi = math.nan
        half = 3 * g.sigma_x + 0.5 * abs(self.state.x_sep)
        xs = [x0 + half * f for f in (-1, -0.5, -0.25, 0.25, 0.5, 1)]
        return chi, min_nonlinearity_scale(spec, xs, 0.0, 1)


def _map_values(d, fn):
    if isinstance(d, dict):
        return {k: _map_values(v, fn) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_map_values(v, fn) for v in d]
    return fn(d)


def _line_map(node, path=(), out=None):
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _line_map(v, path + (key,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


def _where(lines, path):
    p = tuple(path)
    while p and p not in lines:
        p = p[:-1]
    line = lines.get(p)
    name = ".".join(str(k) for k in path) or "<root>"
    return f"line {line}: {name}" if line else name


def _coerce(value, tp, path, lines):
    origin = getattr(tp, "__origin__", None)
    args = getattr(tp, "__args__", ())
    if origin is Optional or (origin is not None and type(None) in args and str(origin) == "typing.Union"):
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _coerce(value, inner, path, lines)
    if dataclasses.is_dataclass(tp):
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise ConfigError(f"{_where(lines, path)}: expected a mapping")
        return _build(tp, value, path, lines)
    if value is None:
        raise ConfigError(f"{_where(lines, path)}: value required")
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{_where(lines, path)}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{_where(lines, path)}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{_where(lines, path)}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{_where(lines, path)}: expected a string, got {value!r}")
        return value
    if origin in (tuple, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{_where(lines, path)}: expected a list")
        if origin is tuple:
            if len(value) != len(args):
                raise ConfigError(f"{_where(lines, path)}: expected {len(args)} entries, got {len(value)}")
            return tuple(_coerce(v, a, path + (i,), lines) for i, (v, a) in enumerate(zip(value, args)))
        return [_coerce(v, args[0], path + (i,), lines) for i, v in enumerate(value)]
    raise TypeError(f"unsupported field type {tp!r}")


def _build(cls, data: dict, path, lines):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = [k for k in data if k not in names]
    if unknown:
        k = unknown[0]
        raise ConfigError(f"{_where(lines, path + (k,))}: unknown key {k!r} (allowed: {', '.join(sorted(names))})")
    kw = {k: _coerce(v, hints[k], path + (k,), lines) for k, v in data.items()}
    return cls(**kw)


def _from_dict(data: dict, lines) -> RunConfig:
    cfg = _build(RunConfig, data, (), lines)
    _validate(cfg, lines)
    return cfg


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def preset_names():
    return PRESETS


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (available: {', '.join(PRESETS)})")
    return resources.files("wignerchaos").joinpath("presets", f"{name}.yaml").read_text()


def _validate(cfg: RunConfig, lines):
    def fail(path, msg):
        raise ConfigError(f"{_where(lines, path)}: {msg}")

    env = cfg.environment
    if env.diffusion is not None and env.gamma != 0:
        fail(("environment", "diffusion"),
             "a direct diffusion override requires gamma = 0 (the reversible classical limit, "
             "gamma -> 0 at fixed D); with gamma > 0 the diffusion is fixed by D = 2 m gamma kT")
    try:
        cfg.build_environment()
    except ValueError as e:
        fail(("environment",), str(e))
    if cfg.state.kind not in ("gaussian", "cat"):
        fail(("state", "kind"), f"must be 'gaussian' or 'cat', got {cfg.state.kind!r}")
    try:
        Bracket.parse(cfg.evolution.bracket)
    except ValueError as e:
        fail(("evolution", "bracket"), str(e))
    if cfg.diagnostics.entropy not in ("von_neumann", "linear_entropy"):
        fail(("diagnostics", "entropy"), "must be 'von_neumann' or 'linear_entropy'")
    if cfg.diagnostics.lyapunov.method not in ("benettin", "fixture", "value"):
        fail(("diagnostics", "lyapunov", "method"), "must be benettin, fixture or value")
    if cfg.diagnostics.lyapunov.method == "value" and cfg.diagnostics.lyapunov.value is None:
        fail(("diagnostics", "lyapunov", "value"), "method 'value' needs a value")
    for block, builder in (("grid", cfg.build_grid), ("potential", cfg.build_potential)):
        try:
            builder()
        except ValueError as e:
            fail((block,), str(e))
    try:
        cfg.gaussian_spec().check_legal(env.hbar)
        cfg.build_state()
    except ValueError as e:
        fail(("state",), str(e))
    try:
        cfg.build_evolution()
    except ValueError as e:
        fail(("evolution",), str(e))


def parse_config(text: str) -> RunConfig:
    """Parse YAML text; a top-level ``preset`` key loads that preset first and
    the remaining keys override it."""
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{where}invalid YAML: {getattr(e, 'problem', e)}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("line 1: <root>: configuration must be a mapping")
    lines = _line_map(root) if root is not None else {}
    preset = data.pop("preset", None)
    if preset is not None:
        if not isinstance(preset, str):
            raise ConfigError(f"{_where(lines, ('preset',))}: preset must be a name")
        if preset not in PRESETS:
            raise ConfigError(f"{_where(lines, ('preset',))}: unknown preset {preset!r} (available: {', '.join(PRESETS)})")
        base = yaml.safe_load(preset_text(preset))
        data = _merge(base, data)
    return _from_dict(data, lines)


def load_config(path_or_preset: str) -> RunConfig:
    """A YAML file path, or a bare preset name."""
    if path_or_preset in PRESETS and not os.path.exists(path_or_preset):
        return parse_config(f"preset: {path_or_preset}\n")
    with open(path_or_preset) as fh:
        return parse_config(fh.read())
