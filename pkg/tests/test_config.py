import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from sombrero.config import (
    SCENARIOS, ConfigError, ScenarioConfig, dump_config, load_config, parse_config,
    scenario_defaults,
)
from sombrero.grid import GridSpec
from sombrero.model import GaussianSpec, ModelParams
from sombrero.propagators import StepKind, StepScheme


@pytest.mark.parametrize("sid", SCENARIOS)
def test_defaults_round_trip(sid):
    cfg = scenario_defaults(sid)
    text = dump_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert dump_config(again) == text


def test_minimal_config_uses_defaults():
    cfg = parse_config("[scenario]\nid = berry_trace\n")
    assert cfg == scenario_defaults("berry_trace")
    assert cfg.duration is None
    assert cfg.initial.a1 == pytest.approx(1 / math.sqrt(2))
    assert cfg.initial.a2 == pytest.approx(-1 / math.sqrt(2))


def test_shorthand_and_overrides():
    cfg = parse_config("""
[scenario]
id = custom
duration = 2.5
engines = full, single_surface
[model]
v = 3
g = -0.5
[grid]
nx = 64
ny = 32
lx = 8
[initial]
a1 = 1
a2 = 1j
px0 = 1.5
[scheme]
kind = LIE
dt = 0.002
""")
    assert (cfg.params.v0, cfg.params.v1) == (3.0, 3.0)
    assert (cfg.params.g11, cfg.params.g22, cfg.params.g12) == (-0.5, -0.5, 0.0)
    assert cfg.grid == GridSpec(64, 32, 8.0, 16.0)
    assert cfg.initial.a1 == pytest.approx(2**-0.5) and cfg.initial.a2 == pytest.approx(1j * 2**-0.5)
    assert cfg.scheme == StepScheme(StepKind.LIE, 0.002)
    assert cfg.engines == ("full", "single_surface")
    assert parse_config(dump_config(cfg)) == cfg


def test_inline_comments():
    cfg = parse_config("[scenario]\nid = berry_trace   # orbit study\n[model]\nv = 3 ; ring radius\n")
    assert cfg.scenario == "berry_trace" and cfg.params.v == 3.0


def test_normalized_amplitudes_kept_exactly():
    a = 0.6
    cfg = parse_config(f"[scenario]\nid = custom\n[initial]\na1 = {a!r}\na2 = 0.8\n")
    assert cfg.initial.a1 == 0.6 and cfg.initial.a2 == 0.8


@pytest.mark.parametrize("text, message", [
    ("[scenario]\nid = nope\n", "unknown scenario"),
    ("[grid]\nnx = 64\n", "missing scenario id"),
    ("[scenario]\nid = custom\n[grid]\nnx = 64\nnx = 128\n", "line 5"),
    ("[scenario]\nid = custom\n[grid]\nnz = 3\n", "unknown key grid.nz"),
    ("[scenario]\nid = custom\n[colour]\nx = 1\n", "unknown section"),
    ("[scenario]\nid = custom\n[model]\nv = 1\nv0 = 2\n", "conflicts"),
    ("[scenario]\nid = custom\n[model]\ng = 1\ng12 = 2\n", "conflicts"),
    ("[scenario]\nid = custom\n[grid]\nnx = 100\n", "power of two"),
    ("[scenario]\nid = custom\n[grid]\nlx = abc\n", "expected a number"),
    ("[scenario]\nid = custom\n[scheme]\ndt = 0\n", "scheme.dt"),
    ("[scenario]\nid = custom\n[scheme]\nkind = euler\n", "scheme.kind"),
    ("[scenario]\nid = custom\n[scheme]\nstrict = maybe\n", "boolean"),
    ("[scenario]\nid = custom\n[initial]\na1 = 0\na2 = 0\n", "initial"),
    ("[scenario]\nid = custom\nengines = tof\n", "unknown engine"),
    ("[scenario]\nid = custom\nduration = 1\nsnapshot_times = 2\n", "outside"),
    ("no section header\n", "malformed"),
])
def test_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 50), st.floats(-2, 2), st.floats(-2, 2), st.floats(1e-5, 1e-2),
       st.floats(0, 2 * math.pi), st.sampled_from([16, 32, 64]))
def test_echo_round_trip_property(v, g, y0, dt, phase, n):
    base = scenario_defaults("custom")
    import cmath
    cfg = replace(base, grid=GridSpec(n, 2 * n, 5.0 + v, 7.0),
                  params=ModelParams(v0=v, v1=v / 3, g11=g, g22=-g, g12=g / 7),
                  initial=GaussianSpec.normalized(0.3, 0.7 * cmath.exp(1j * phase), y0=y0),
                  scheme=StepScheme(dt=dt), duration=3.0, snapshot_times=(0.1, 1 / 3))
    assert parse_config(dump_config(cfg)) == cfg


def test_shipped_configs_parse():
    from pathlib import Path
    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.ini"))
    assert paths
    for p in paths:
        assert isinstance(load_config(p), ScenarioConfig)
