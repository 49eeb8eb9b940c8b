"""Scenario configuration: INI-style text with per-scenario defaults.

Sections and keys::

    [grid]      nx ny lx ly
    [model]     v | v0 v1    g | g11 g22 g12    trap born_huang
    [initial]   a1 a2 x0 y0 px0 py0 width
    [scheme]    kind dt density_update monitor_every norm_tol edge_tol strict
    [scenario]  id duration max_duration snapshot_times g_sweep tof_duration
                sample_every engines
    [output]    dir

``v`` and ``g`` are shorthands for the isotropic model; they cannot be mixed
with the explicit keys.  Unknown sections or keys and duplicate keys are
errors.  ``#`` and ``;`` start comments, also after a value.  ``dump_config``
writes the fully resolved form, which parses back to an equal
``ScenarioConfig``.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import GridSpec
from .model import GaussianSpec, ModelParams
from .propagators import DensityUpdate, MonitorConfig, StepKind, StepScheme

SCENARIOS = ("berry_trace", "self_interference", "time_of_flight", "phonon_swap",
             "nonabelian_roundtrip", "custom")

ENGINES = ("full", "single_surface")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    grid: GridSpec = field(default_factory=GridSpec)
    params: ModelParams = field(default_factory=ModelParams)
    initial: GaussianSpec = field(default_factory=GaussianSpec)
    scheme: StepScheme = field(default_factory=StepScheme)
    monitor_every: int = 100
    norm_tol: float = 1e-8
    edge_tol: float = 1e-6
    strict: bool = False
    duration: float | None = 1.0  # None: run one measured orbit
    max_duration: float = 20.0
    snapshot_times: tuple = ()
    g_sweep: tuple = ()
    tof_duration: float = 0.0
    sample_every: float = 0.05
    engines: tuple = ("full",)
    output_dir: str = "out"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario.id: unknown scenario {self.scenario!r}")
        if self.duration is not None and self.duration < 0:
            raise ConfigError("scenario.duration: must be non-negative")
        horizon = self.duration if self.duration is not None else self.max_duration
        for t in self.snapshot_times:
            if t < 0 or t > horizon + 1e-12:
                raise ConfigError(f"scenario.snapshot_times: {t!r} outside [0, duration]")
        for e in self.engines:
            if e not in ENGINES:
                raise ConfigError(f"scenario.engines: unknown engine {e!r}")
        if not self.sample_every > 0:
            raise ConfigError("scenario.sample_every: must be positive")

    def monitor(self, strict: bool | None = None) -> MonitorConfig:
        return MonitorConfig(every=self.monitor_every, norm_tol=self.norm_tol,
                             edge_tol=self.edge_tol,
                             strict=self.strict if strict is None else strict)

    @property
    def g_values(self) -> tuple:
        """Base interaction strength followed by the sweep values."""
        base = self.params.g11
        return (base,) + tuple(g for g in self.g_sweep if g != base)


def _isqrt2():
    return 1 / math.sqrt(2)


TAU_COL_V8 = 16 * math.pi


def scenario_defaults(scenario: str) -> ScenarioConfig:
    """Parameter sets of the five reproduced experiments."""
    lower = dict(a1=_isqrt2(), a2=-_isqrt2(), width=1.0)
    if scenario == "berry_trace":
        return ScenarioConfig(
            scenario, grid=GridSpec(256, 256, 16.0, 16.0), params=ModelParams.isotropic(4.0),
            initial=GaussianSpec(x0=0.0, y0=-3.0, px0=4.0, py0=0.0, **lower),
            duration=None, max_duration=20.0, sample_every=0.05, engines=("full",))
    if scenario in ("self_interference", "time_of_flight"):
        tc = TAU_COL_V8
        return ScenarioConfig(
            scenario, grid=GridSpec(256, 256, 24.0, 24.0), params=ModelParams.isotropic(8.0),
            initial=GaussianSpec(px0=8.0, **lower), duration=tc,
            snapshot_times=(tc / 2, 3 * tc / 4, tc) if scenario == "self_interference" else (),
            g_sweep=(0.25, -0.25) if scenario == "self_interference" else (),
            tof_duration=math.pi if scenario == "time_of_flight" else 0.0,
            sample_every=tc / 64, engines=ENGINES)
    if scenario == "phonon_swap":
        return ScenarioConfig(
            scenario, grid=GridSpec(256, 256, 24.0, 24.0), params=ModelParams.isotropic(8.0),
            initial=GaussianSpec(px0=8.0, **lower), duration=400.0, g_sweep=(0.25, -0.25),
            sample_every=1.0, engines=ENGINES, monitor_every=1000)
    if scenario == "nonabelian_roundtrip":
        return ScenarioConfig(
            scenario, grid=GridSpec(256, 256, 16.0, 16.0), params=ModelParams.isotropic(4.0),
            initial=GaussianSpec(y0=3.0, px0=4.0, **lower), duration=None, max_duration=20.0,
            sample_every=0.05, engines=("full",))
    if scenario == "custom":
        return ScenarioConfig(scenario)
    raise ConfigError(f"scenario.id: unknown scenario {scenario!r}")


# ------------------------------------------------------------------ parsing

_KEYS = {
    "grid": {"nx", "ny", "lx", "ly"},
    "model": {"v", "v0", "v1", "g", "g11", "g22", "g12", "trap", "born_huang"},
    "initial": {"a1", "a2", "x0", "y0", "px0", "py0", "width"},
    "scheme": {"kind", "dt", "density_update", "monitor_every", "norm_tol", "edge_tol", "strict"},
    "scenario": {"id", "duration", "max_duration", "snapshot_times", "g_sweep", "tof_duration",
                 "sample_every", "engines"},
    "output": {"dir"},
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _float(sec, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{sec}.{key}: expected a number, got {raw!r}") from None


def _int(sec, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{sec}.{key}: expected an integer, got {raw!r}") from None


def _bool(sec, key, raw):
    r = raw.strip().lower()
    if r in _TRUE:
        return True
    if r in _FALSE:
        return False
    raise ConfigError(f"{sec}.{key}: expected a boolean, got {raw!r}")


def _complex(sec, key, raw):
    try:
        return complex(raw.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"{sec}.{key}: expected a real or complex number, got {raw!r}") from None


def _floats(sec, key, raw):
    items = [s for s in (t.strip() for t in raw.split(",")) if s]
    return tuple(_float(sec, key, s) for s in items)


def parse_config(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#", ";"), default_section="__none__")
    try:
        cp.read_string(text, source="<config>")
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.section}.{e.option} at line {e.lineno}") from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}] at line {e.lineno}") from None
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None

    for sec in cp.sections():
        if sec not in _KEYS:
            raise ConfigError(f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in _KEYS[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")

    if not cp.has_option("scenario", "id"):
        raise ConfigError("scenario.id: missing scenario id")
    sid = cp["scenario"]["id"].strip()
    base = scenario_defaults(sid)

    def sect(name):
        return cp[name] if cp.has_section(name) else {}

    try:
        grid = _parse_grid(sect("grid"), base.grid)
        params = _parse_model(sect("model"), base.params)
        initial = _parse_initial(sect("initial"), base.initial)
        scheme, mon = _parse_scheme(sect("scheme"), base)
        scen = _parse_scenario(sect("scenario"), base)
        out = dict(sect("output"))
        return replace(base, grid=grid, params=params, initial=initial, scheme=scheme,
                       output_dir=out.get("dir", base.output_dir).strip(), **mon, **scen)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _parse_grid(s, g: GridSpec) -> GridSpec:
    kw = dict(nx=g.nx, ny=g.ny, Lx=g.Lx, Ly=g.Ly)
    for key, name in (("nx", "nx"), ("ny", "ny")):
        if key in s:
            kw[name] = _int("grid", key, s[key])
    for key, name in (("lx", "Lx"), ("ly", "Ly")):
        if key in s:
            kw[name] = _float("grid", key, s[key])
    try:
        return GridSpec(**kw)
    except ValueError as e:
        raise ConfigError(f"grid: {e}") from None


def _parse_model(s, p: ModelParams) -> ModelParams:
    kw = dict(v0=p.v0, v1=p.v1, g11=p.g11, g22=p.g22, g12=p.g12, trap_on=p.trap_on,
              born_huang_on=p.born_huang_on)
    if "v" in s:
        if "v0" in s or "v1" in s:
            raise ConfigError("model.v: conflicts with model.v0/model.v1")
        kw["v0"] = kw["v1"] = _float("model", "v", s["v"])
    for k in ("v0", "v1"):
        if k in s:
            kw[k] = _float("model", k, s[k])
    if "g" in s:
        if any(k in s for k in ("g11", "g22", "g12")):
            raise ConfigError("model.g: conflicts with model.g11/g22/g12")
        kw["g11"] = kw["g22"] = _float("model", "g", s["g"])
        kw["g12"] = 0.0
    for k in ("g11", "g22", "g12"):
        if k in s:
            kw[k] = _float("model", k, s[k])
    if "trap" in s:
        kw["trap_on"] = _bool("model", "trap", s["trap"])
    if "born_huang" in s:
        kw["born_huang_on"] = _bool("model", "born_huang", s["born_huang"])
    try:
        return ModelParams(**kw)
    except ValueError as e:
        raise ConfigError(f"model: {e}") from None


def _parse_initial(s, g: GaussianSpec) -> GaussianSpec:
    a1 = _complex("initial", "a1", s["a1"]) if "a1" in s else g.a1
    a2 = _complex("initial", "a2", s["a2"]) if "a2" in s else g.a2
    kw = {k: getattr(g, k) for k in ("x0", "y0", "px0", "py0", "width")}
    for k in kw:
        if k in s:
            kw[k] = _float("initial", k, s[k])
    if not kw["width"] > 0:
        raise ConfigError("initial.width: must be positive")
    if abs(abs(a1) ** 2 + abs(a2) ** 2 - 1.0) > 1e-14:
        try:
            return GaussianSpec.normalized(a1, a2, **kw)
        except ValueError as e:
            raise ConfigError(f"initial.a1: {e}") from None
    return GaussianSpec(a1=a1, a2=a2, **kw)


def _parse_scheme(s, base: ScenarioConfig):
    sch = base.scheme
    kind = s.get("kind", sch.kind.value).strip().lower()
    dens = s.get("density_update", sch.density_update.value).strip().lower()
    try:
        kind = StepKind(kind)
    except ValueError:
        raise ConfigError(f"scheme.kind: expected 'strang' or 'lie', got {kind!r}") from None
    try:
        dens = DensityUpdate(dens)
    except ValueError:
        raise ConfigError(f"scheme.density_update: expected 'frozen' or 'midpoint', got {dens!r}") from None
    dt = _float("scheme", "dt", s["dt"]) if "dt" in s else sch.dt
    if not dt > 0:
        raise ConfigError("scheme.dt: must be positive")
    mon = dict(
        monitor_every=_int("scheme", "monitor_every", s["monitor_every"]) if "monitor_every" in s else base.monitor_every,
        norm_tol=_float("scheme", "norm_tol", s["norm_tol"]) if "norm_tol" in s else base.norm_tol,
        edge_tol=_float("scheme", "edge_tol", s["edge_tol"]) if "edge_tol" in s else base.edge_tol,
        strict=_bool("scheme", "strict", s["strict"]) if "strict" in s else base.strict,
    )
    if mon["monitor_every"] < 1:
        raise ConfigError("scheme.monitor_every: must be at least 1")
    return StepScheme(kind, dt, dens), mon


def _parse_scenario(s, base: ScenarioConfig) -> dict:
    out = {}
    if "duration" in s:
        raw = s["duration"].strip().lower()
        out["duration"] = None if raw == "auto" else _float("scenario", "duration", raw)
    if "max_duration" in s:
        out["max_duration"] = _float("scenario", "max_duration", s["max_duration"])
    if "snapshot_times" in s:
        out["snapshot_times"] = _floats("scenario", "snapshot_times", s["snapshot_times"])
    if "g_sweep" in s:
        out["g_sweep"] = _floats("scenario", "g_sweep", s["g_sweep"])
    if "tof_duration" in s:
        out["tof_duration"] = _float("scenario", "tof_duration", s["tof_duration"])
    if "sample_every" in s:
        out["sample_every"] = _float("scenario", "sample_every", s["sample_every"])
    if "engines" in s:
        out["engines"] = tuple(e.strip() for e in s["engines"].split(",") if e.strip())
    return out


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# ------------------------------------------------------------------ echo


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, complex):
        if x.imag == 0:
            return repr(x.real)
        return f"{x.real!r}{x.imag:+.17g}j"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def dump_config(cfg: ScenarioConfig) -> str:
    """Fully resolved config text; ``parse_config(dump_config(c)) == c``."""
    p, i, g, s = cfg.params, cfg.initial, cfg.grid, cfg.scheme
    lines = [
        "[scenario]",
        f"id = {cfg.scenario}",
        f"duration = {'auto' if cfg.duration is None else _fmt(float(cfg.duration))}",
        f"max_duration = {_fmt(float(cfg.max_duration))}",
        f"snapshot_times = {', '.join(_fmt(float(t)) for t in cfg.snapshot_times)}",
        f"g_sweep = {', '.join(_fmt(float(t)) for t in cfg.g_sweep)}",
        f"tof_duration = {_fmt(float(cfg.tof_duration))}",
        f"sample_every = {_fmt(float(cfg.sample_every))}",
        f"engines = {', '.join(cfg.engines)}",
        "",
        "[grid]",
        f"nx = {g.nx}",
        f"ny = {g.ny}",
        f"lx = {_fmt(float(g.Lx))}",
        f"ly = {_fmt(float(g.Ly))}",
        "",
        "[model]",
        f"v0 = {_fmt(float(p.v0))}",
        f"v1 = {_fmt(float(p.v1))}",
        f"g11 = {_fmt(float(p.g11))}",
        f"g22 = {_fmt(float(p.g22))}",
        f"g12 = {_fmt(float(p.g12))}",
        f"trap = {_fmt(p.trap_on)}",
        f"born_huang = {_fmt(p.born_huang_on)}",
        "",
        "[initial]",
        f"a1 = {_fmt(complex(i.a1))}",
        f"a2 = {_fmt(complex(i.a2))}",
        f"x0 = {_fmt(float(i.x0))}",
        f"y0 = {_fmt(float(i.y0))}",
        f"px0 = {_fmt(float(i.px0))}",
        f"py0 = {_fmt(float(i.py0))}",
        f"width = {_fmt(float(i.width))}",
        "",
        "[scheme]",
        f"kind = {s.kind.value}",
        f"dt = {_fmt(float(s.dt))}",
        f"density_update = {s.density_update.value}",
        f"monitor_every = {cfg.monitor_every}",
        f"norm_tol = {_fmt(float(cfg.norm_tol))}",
        f"edge_tol = {_fmt(float(cfg.edge_tol))}",
        f"strict = {_fmt(cfg.strict)}",
        "",
        "[output]",
        f"dir = {cfg.output_dir}",
        "",
    ]
    return "\n".join(lines)
