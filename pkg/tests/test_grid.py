import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sombrero.grid import (
    GridError, GridSpec, Observable, PropagationError, Rep, RepresentationError, SpinorField,
    embed, expectation, to_momentum, to_position,
)
from sombrero.model import GaussianSpec, make_initial


@pytest.fixture(scope="module")
def grid():
    return GridSpec(128, 128, 10.0, 10.0)


def random_field(grid, seed=0, ncomp=2):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(ncomp,) + grid.shape) + 1j * rng.normal(size=(ncomp,) + grid.shape)
    return SpinorField(grid, Rep.POSITION, data).normalized()


def gaussian(grid, **kw):
    return make_initial(GaussianSpec(**kw), grid)


class TestGridSpec:
    def test_spectral_pairing(self):
        for g in (GridSpec(), GridSpec(64, 32, 5.0, 7.5)):
            assert g.dx * g.dpx * g.nx == pytest.approx(2 * np.pi, rel=1e-15)
            assert g.dy * g.dpy * g.ny == pytest.approx(2 * np.pi, rel=1e-15)

    def test_default_grid(self):
        g = GridSpec()
        assert (g.nx, g.ny, g.Lx, g.Ly) == (256, 256, 16.0, 16.0)
        assert g.dx == 0.125
        assert g.pmax_x == pytest.approx(8 * np.pi)

    @pytest.mark.parametrize("n", [4, 12, 100, 0])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(GridError):
            GridSpec(n, 64, 5.0, 5.0)

    def test_momentum_axis_fft_order(self, grid):
        assert grid.px[0] == 0.0
        assert grid.px[1] == pytest.approx(grid.dpx)
        assert grid.px[-1] == pytest.approx(-grid.dpx)
        assert np.min(grid.px) == pytest.approx(-grid.pmax_x)

    def test_check_resolves(self):
        g = GridSpec(256, 256, 16.0, 16.0)
        g.check_resolves(8 + 4)
        with pytest.raises(GridError):
            GridSpec(64, 64, 16.0, 16.0).check_resolves(12.0)


class TestTransforms:
    def test_unit_gaussian_self_dual(self, grid):
        f = gaussian(grid)
        m = to_momentum(f)
        PX, PY = grid.PXY
        expected = np.exp(-(PX**2 + PY**2) / 2) / np.sqrt(np.pi)
        assert np.max(np.abs(m.c1 - expected)) < 1e-12

    def test_shift_theorem(self, grid):
        f = gaussian(grid, px0=3.0, py0=-2.0)
        m = to_momentum(f)
        PX, PY = grid.PXY
        expected = np.exp(-((PX - 3) ** 2 + (PY + 2) ** 2) / 2) / np.sqrt(np.pi)
        assert np.max(np.abs(m.c1 - expected)) < 1e-12

    def test_round_trip_identity(self, grid):
        f = random_field(grid, 1)
        back = to_position(to_momentum(f))
        assert np.max(np.abs(back.data - f.data)) < 1e-12
        assert back.rep is Rep.POSITION

    def test_single_mode_is_plane_wave(self, grid):
        data = np.zeros((1,) + grid.shape, complex)
        data[0, 3, 5] = 1.0
        f = to_position(SpinorField(grid, Rep.MOMENTUM, data))
        mag = np.abs(f.c1)
        assert np.ptp(mag) < 1e-14
        # the mode carries momentum (px[3], py[5])
        X, Y = grid.XY
        phase = f.c1 / f.c1[0, 0]
        expected = np.exp(1j * (grid.px[3] * (X - X[0, 0]) + grid.py[5] * (Y - Y[0, 0])))
        assert np.max(np.abs(phase - expected)) < 1e-12

    def test_inverse_of_gaussian_examples(self, grid):
        for kw in ({}, {"px0": 3.0, "py0": -2.0}):
            f = gaussian(grid, **kw)
            assert np.max(np.abs(to_position(to_momentum(f)).data - f.data)) < 1e-12

    def test_wrong_rep_raises(self, grid):
        f = gaussian(grid)
        with pytest.raises(RepresentationError):
            to_position(f)
        with pytest.raises(RepresentationError):
            to_momentum(to_momentum(f))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from([(8, 8), (16, 32), (64, 16)]),
           st.floats(0.5, 20.0), st.floats(0.5, 20.0))
    def test_parseval(self, seed, shape, lx, ly):
        g = GridSpec(shape[0], shape[1], lx, ly)
        f = random_field(g, seed)
        assert abs(to_momentum(f).norm() - f.norm()) < 1e-12
        m = to_momentum(f)
        assert abs(to_position(m).norm() - m.norm()) < 1e-12
        assert np.max(np.abs(to_position(m).data - f.data)) < 1e-12


class TestExpectation:
    def test_ground_state_variances(self, grid):
        f = gaussian(grid)
        assert expectation(f, Observable.X2) == pytest.approx(0.5, abs=1e-12)
        assert expectation(f, Observable.PX2) == pytest.approx(0.5, abs=1e-12)
        assert expectation(f, "y2") == pytest.approx(0.5, abs=1e-12)
        assert expectation(f, "py2") == pytest.approx(0.5, abs=1e-12)

    def test_shifted_position(self, grid):
        f = gaussian(grid, y0=-3.0)
        assert expectation(f, "y") == pytest.approx(-3.0, abs=1e-6)

    def test_boosted_momentum(self, grid):
        f = gaussian(grid, px0=4.0)
        assert expectation(f, "px") == pytest.approx(4.0, abs=1e-6)
        assert expectation(f, "py") == pytest.approx(0.0, abs=1e-10)

    def test_input_representation_untouched(self, grid):
        f = gaussian(grid, px0=1.0)
        m = to_momentum(f)
        expectation(m, "x")
        assert m.rep is Rep.MOMENTUM

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_real_field_has_zero_mean_momentum(self, seed):
        g = GridSpec(32, 32, 6.0, 6.0)
        rng = np.random.default_rng(seed)
        f = SpinorField(g, Rep.POSITION, rng.normal(size=(2, 32, 32))).normalized()
        assert abs(expectation(f, "px")) < 1e-10
        assert abs(expectation(f, "py")) < 1e-10

    def test_nan_raises(self, grid):
        f = gaussian(grid)
        f.data[0, 0, 0] = np.nan
        with pytest.raises(PropagationError):
            expectation(f, "x")


class TestEmbed:
    def test_embedding_preserves_field(self, grid):
        f = gaussian(grid, x0=1.0, px0=2.0)
        big = GridSpec(256, 256, 20.0, 20.0)
        e = embed(f, big)
        assert e.norm() == pytest.approx(f.norm(), abs=1e-14)
        assert expectation(e, "x") == pytest.approx(expectation(f, "x"), abs=1e-12)
        assert expectation(e, "px") == pytest.approx(expectation(f, "px"), abs=1e-10)

    def test_rejects_different_spacing(self, grid):
        with pytest.raises(GridError):
            embed(gaussian(grid), GridSpec(256, 256, 10.0, 10.0))
