import math
from dataclasses import replace

import numpy as np
import pytest

from sombrero.config import ConfigError, scenario_defaults
from sombrero.grid import GridSpec
from sombrero.model import GaussianSpec, ModelParams, make_initial
from sombrero.propagators import StepScheme
from sombrero.scenarios import (
    berry_jump, expanded_grid, fit_dt, run_berry_trace, run_nonabelian_roundtrip,
    run_phonon_swap, run_self_interference, run_time_of_flight, swap_signal,
)

SMALL = dict(grid=GridSpec(64, 64, 8.0, 8.0), scheme=StepScheme(dt=5e-3))


class TestFitDt:
    def test_exact_multiple_kept(self):
        assert fit_dt(2e-3, 400.0, (1.0,)) == (pytest.approx(2e-3), 200000)

    def test_snapshot_fractions(self):
        tc = 16 * math.pi
        dt, n = fit_dt(1e-3, tc, (tc / 2, 3 * tc / 4, tc / 64))
        assert dt <= 1e-3 and n % 64 == 0
        for frac in (0.5, 0.75, 1 / 64):
            assert (frac * n) == int(frac * n)

    def test_irrational_mark_rejected(self):
        with pytest.raises(ConfigError):
            fit_dt(1e-3, 1.0, (1 / math.pi,))


class TestMetrics:
    def test_swap_signal(self):
        t = np.arange(0, 401.0)
        nx = 20 + 10 * np.cos(np.pi * t / 200)
        ny = 20 - 10 * np.cos(np.pi * t / 200)
        s = swap_signal(t, nx, ny)
        assert s["max_s"] == pytest.approx(1.0)
        # s = -cos(pi t / 200) exceeds 1/2 for t in (133.3, 266.7)
        assert s["longest_above_total"] == pytest.approx(132, abs=1)
        assert s["longest_above_window"] == pytest.approx(100, abs=1)
        assert s["first_crossing"] == pytest.approx(101)

    def test_no_swap(self):
        t = np.arange(0, 401.0)
        s = swap_signal(t, 30 + 0 * t, 5 + 0 * t)
        assert s["max_s"] == -1 and s["longest_above_total"] == 0

    def test_berry_jump(self):
        t = np.linspace(0, 10, 201)
        g = np.where(t < 5, 0.01 * np.sin(t), np.pi - 0.02)
        j = berry_jump(t, g, 10.0)
        assert abs(j["jump"]) == pytest.approx(np.pi - 0.02, abs=0.02)
        assert j["before_max_abs"] <= 0.01
        with pytest.raises(ValueError):
            berry_jump(t[:50], g[:50], 10.0)

    def test_expanded_grid(self):
        g = GridSpec(64, 64, 8.0, 8.0)
        f = make_initial(GaussianSpec(px0=2.0), g)
        big = expanded_grid(f, math.pi)
        assert big.dx == g.dx and big.nx >= 64 and big.Lx > 8 + 2 * math.pi


class TestScenarioRuns:
    def test_berry_trace_small(self):
        b = run_berry_trace(replace(scenario_defaults("berry_trace"), **SMALL))
        s = b.summary
        assert s["r_abs_initial"] == pytest.approx(1.0, abs=1e-6)
        assert s["r_abs_min"] < 0.95
        assert 0.9 * np.pi <= abs(s["jump_jump"]) <= 1.1 * np.pi
        assert s["relation_max_residual"] < 1e-6
        assert set(b.series) == {"bloch", "orbit"}

    def test_v0_control_freezes_spin(self):
        cfg = replace(scenario_defaults("berry_trace"), params=ModelParams.isotropic(0.0),
                      duration=2.0, **SMALL)
        b = run_berry_trace(cfg)
        ser = b.series["bloch"]
        assert np.max(np.abs(ser.column("gamma_wrapped"))) < 1e-12
        assert np.ptp(ser.column("P1")) < 1e-12
        np.testing.assert_allclose(ser.column("u"), -1.0, atol=1e-12)

    def test_roundtrip_small(self):
        b = run_nonabelian_roundtrip(replace(scenario_defaults("nonabelian_roundtrip"), **SMALL))
        assert set(b.runs) == {"cw", "ccw"}
        assert b.runs["cw"]["y0"] == 3.0
        assert b.summary["interchange_residual"] < 1e-4
        np.testing.assert_allclose(b.summary["P_initial"], 0.5, atol=1e-12)

    def test_roundtrip_v0_control(self):
        cfg = replace(scenario_defaults("nonabelian_roundtrip"), params=ModelParams.isotropic(0.0),
                      duration=1.0, **SMALL)
        b = run_nonabelian_roundtrip(cfg)
        for name, ser in b.series.items():
            assert np.ptp(ser.column("P1")) < 1e-12 and np.ptp(ser.column("P2")) < 1e-12

    def test_self_interference_small(self):
        tc = 8 * math.pi
        cfg = replace(scenario_defaults("self_interference"), grid=GridSpec(128, 128, 12.0, 12.0),
                      params=ModelParams.isotropic(4.0), initial=GaussianSpec.normalized(1, -1, px0=4.0),
                      duration=tc / 2, snapshot_times=(tc / 4, tc / 2), sample_every=tc / 32,
                      g_sweep=(), scheme=StepScheme(dt=1e-2))
        b = run_self_interference(cfg)
        assert set(b.runs) == {"full_g+0", "single_surface_g+0"}
        c = b.summary["node_contrast"]
        half = repr(tc / 2)
        assert c["full_g+0"][half] > 0.8
        assert c["single_surface_g+0"][half] < 0.2
        assert len(b.snapshots) == 4

    def test_time_of_flight_small(self):
        cfg = replace(scenario_defaults("time_of_flight"), grid=GridSpec(64, 64, 12.0, 12.0),
                      params=ModelParams.isotropic(3.0), initial=GaussianSpec.normalized(1, -1, px0=3.0),
                      duration=2.0, scheme=StepScheme(dt=1e-2))
        b = run_time_of_flight(cfg)
        for e in ("full", "single_surface"):
            assert b.summary["momentum_change"][e] < 1e-10
            f, _ = b.snapshots[f"tof_{e}"]
            assert f.grid.dx == cfg.grid.dx and f.grid.nx > 64
            assert f.norm() == pytest.approx(1.0, abs=1e-12)

    def test_phonon_small(self):
        cfg = replace(scenario_defaults("phonon_swap"), grid=GridSpec(128, 128, 12.0, 12.0),
                      scheme=StepScheme(dt=5e-3), duration=2.0, sample_every=0.5, g_sweep=(0.25,))
        b = run_phonon_swap(cfg)
        assert len(b.series) == 4
        ser = b.series["phonons_full_g+0"]
        assert ser.column("n_x")[0] == pytest.approx(32.5, abs=1e-6)
        assert ser.column("n_y")[0] == pytest.approx(0.5, abs=1e-9)
