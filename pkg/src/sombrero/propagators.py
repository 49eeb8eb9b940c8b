"""Split-operator time evolution and a dense reference propagator.

Three engines share one stepping loop:

* ``full``  -- two-component Gross-Pitaevskii flow with spin-orbit coupling;
* ``single_surface`` -- scalar flow on the lower adiabatic surface with the
  Berry vector potential omitted (optional Born-Huang term);
* ``tof`` -- ballistic expansion, kinetic energy plus optional mean field.

Fields are kept in position representation between calls.  Inside a batch of
Strang steps the trailing and leading position half-steps are merged; this is
exact because the position factor leaves the density unchanged.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np
import scipy.fft as sfft
import scipy.linalg

from .grid import GridError, GridSpec, Rep, SpinorField, as_rep, edge_mass, fft_forward, fft_workers
from .model import ModelParams, aps, kinetic_soc_arrays

log = logging.getLogger(__name__)


class StepKind(enum.Enum):
    LIE = "lie"
    STRANG = "strang"


class DensityUpdate(enum.Enum):
    FROZEN = "frozen"
    MIDPOINT = "midpoint"


class Engine(enum.Enum):
    FULL = "full"
    SINGLE_SURFACE = "single_surface"
    TOF = "tof"


class MonitoredFailure(RuntimeError):
    """Norm drift or edge mass beyond tolerance in strict mode."""


@dataclass(frozen=True)
class StepScheme:
    kind: StepKind = StepKind.STRANG
    dt: float = 1e-3
    density_update: DensityUpdate = DensityUpdate.FROZEN

    def __post_init__(self):
        object.__setattr__(self, "kind", StepKind(self.kind))
        object.__setattr__(self, "density_update", DensityUpdate(self.density_update))
        if not self.dt > 0:
            raise ValueError("time step must be positive")

    def steps_for(self, duration: float) -> int:
        """Number of steps covering ``duration``; it must be a whole multiple of dt."""
        n = round(duration / self.dt)
        if n < 0 or abs(n * self.dt - duration) > 1e-9 * max(1.0, abs(duration)):
            raise ValueError(f"duration {duration!r} is not a multiple of dt={self.dt!r}")
        return int(n)


@dataclass
class MonitorConfig:
    every: int = 100
    norm_tol: float = 1e-8
    edge_tol: float = 1e-6
    edge_width: int = 4
    strict: bool = False


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True)
def _mul_phase(data, phase):
    nc, nx, ny = data.shape
    for c in range(nc):
        for i in range(nx):
            for j in range(ny):
                data[c, i, j] *= phase[i, j]


@numba.njit(cache=True)
def _nonlinear_spinor(data, vtrap, g11, g12, g22, h):
    nx, ny = data.shape[1], data.shape[2]
    for i in range(nx):
        for j in range(ny):
            a = data[0, i, j]
            b = data[1, i, j]
            r1 = a.real * a.real + a.imag * a.imag
            r2 = b.real * b.real + b.imag * b.imag
            t1 = -(vtrap[i, j] + g11 * r1 + g12 * r2) * h
            t2 = -(vtrap[i, j] + g12 * r1 + g22 * r2) * h
            data[0, i, j] = a * complex(np.cos(t1), np.sin(t1))
            data[1, i, j] = b * complex(np.cos(t2), np.sin(t2))


@numba.njit(cache=True)
def _nonlinear_scalar(data, vtrap, g, h):
    nx, ny = data.shape[1], data.shape[2]
    for i in range(nx):
        for j in range(ny):
            a = data[0, i, j]
            t = -(vtrap[i, j] + g * (a.real * a.real + a.imag * a.imag)) * h
            data[0, i, j] = a * complex(np.cos(t), np.sin(t))


@numba.njit(cache=True)
def _nonlinear_given_density(data, vtrap, rho, gm, h):
    # position factor with an externally supplied density (midpoint variant)
    nc, nx, ny = data.shape
    for c in range(nc):
        for i in range(nx):
            for j in range(ny):
                s = vtrap[i, j]
                for k in range(nc):
                    s += gm[c, k] * rho[k, i, j]
                t = -s * h
                data[c, i, j] *= complex(np.cos(t), np.sin(t))


@numba.njit(cache=True)
def _spinor_matrix(data, d, u, l):
    nx, ny = data.shape[1], data.shape[2]
    for i in range(nx):
        for j in range(ny):
            a = data[0, i, j]
            b = data[1, i, j]
            data[0, i, j] = d[i, j] * a + u[i, j] * b
            data[1, i, j] = l[i, j] * a + d[i, j] * b


# ---------------------------------------------------------------- engines


class _Stepper:
    """Precomputed factors for one (grid, params, scheme) combination."""

    ncomp = 2

    def __init__(self, grid: GridSpec, params: ModelParams, scheme: StepScheme):
        self.grid = grid
        self.params = params
        self.scheme = scheme
        X, Y = grid.XY
        self.vtrap = 0.5 * (X**2 + Y**2) if self._trap else np.zeros(grid.shape)
        self._phase_cache: dict[float, np.ndarray] = {}

    _trap = True

    @property
    def nonlinear(self) -> bool:
        return self.params.interacting

    # position factor -------------------------------------------------------
    def _static_phase(self, h: float) -> np.ndarray:
        ph = self._phase_cache.get(h)
        if ph is None:
            ph = np.exp(-1j * self.vtrap * h)
            self._phase_cache[h] = ph
        return ph

    def position_factor(self, data: np.ndarray, h: float) -> None:
        if not self.nonlinear:
            if self._trap:
                _mul_phase(data, self._static_phase(h))
            return
        self._nonlinear(data, h)

    def position_factor_density(self, data, h, rho) -> None:
        _nonlinear_given_density(data, self.vtrap, rho, self._gm, h)

    # momentum factor ---------------------------------------------------------
    def momentum_factor(self, data: np.ndarray) -> None:
        raise NotImplementedError

    def kinetic_substep(self, data: np.ndarray) -> np.ndarray:
        w = fft_workers()
        k = sfft.fft2(data, workers=w, overwrite_x=True)
        self.momentum_factor(k)
        return sfft.ifft2(k, workers=w, overwrite_x=True)

    # stepping --------------------------------------------------------------
    def advance(self, data: np.ndarray, n: int) -> np.ndarray:
        """Apply ``n`` steps to position-space ``data``; returns the new array."""
        if n <= 0:
            return data
        dt = self.scheme.dt
        data = np.array(data, dtype=complex, copy=True)
        if self.scheme.density_update is DensityUpdate.MIDPOINT and self.nonlinear:
            for _ in range(n):
                data = self._midpoint_step(data)
            return data
        if self.scheme.kind is StepKind.LIE:
            for _ in range(n):
                self.position_factor(data, dt)
                data = self.kinetic_substep(data)
            return data
        self.position_factor(data, 0.5 * dt)
        for i in range(n):
            data = self.kinetic_substep(data)
            self.position_factor(data, dt if i < n - 1 else 0.5 * dt)
        return data

    def _density(self, data):
        return data.real**2 + data.imag**2

    def _midpoint_step(self, data):
        dt = self.scheme.dt
        # predictor: half a step with the frozen density
        pred = data.copy()
        if self.scheme.kind is StepKind.LIE:
            self.position_factor(pred, 0.5 * dt)
            pred = self._kinetic_fraction(pred, 0.5)
        else:
            self.position_factor(pred, 0.25 * dt)
            pred = self._kinetic_fraction(pred, 0.5)
            self.position_factor(pred, 0.25 * dt)
        rho = self._density(pred)
        out = data.copy()
        if self.scheme.kind is StepKind.LIE:
            self.position_factor_density(out, dt, rho)
            return self.kinetic_substep(out)
        self.position_factor_density(out, 0.5 * dt, rho)
        out = self.kinetic_substep(out)
        self.position_factor_density(out, 0.5 * dt, rho)
        return out

    @cached_property
    def _half_stepper(self):
        return type(self)(self.grid, self.params, StepScheme(self.scheme.kind, 0.5 * self.scheme.dt))

    def _kinetic_fraction(self, data, frac):
        assert frac == 0.5
        return self._half_stepper.kinetic_substep(data)

    # diagnostics -----------------------------------------------------------
    def energy(self, f: SpinorField) -> float:
        raise NotImplementedError

    def _position_energy(self, pos: SpinorField) -> float:
        rho = pos.data.real**2 + pos.data.imag**2
        w = pos.grid.weight(Rep.POSITION)
        e = float(np.sum(self.vtrap * rho.sum(axis=0)) * w) if self._trap else 0.0
        gm = self._gm
        for i in range(rho.shape[0]):
            for j in range(rho.shape[0]):
                if gm[i, j]:
                    e += 0.5 * gm[i, j] * float(np.sum(rho[i] * rho[j]) * w)
        return e


class FullStepper(_Stepper):
    ncomp = 2

    def __init__(self, grid, params, scheme):
        super().__init__(grid, params, scheme)
        PX, PY = grid.PXY
        QX, QY = grid.PXY_odd
        self.d, self.u, self.l = kinetic_soc_arrays(QX, QY, params, scheme.dt, p2=PX**2 + PY**2)
        self._gm = params.gmat

    def _nonlinear(self, data, h):
        p = self.params
        _nonlinear_spinor(data, self.vtrap, p.g11, p.g12, p.g22, h)

    def momentum_factor(self, data):
        _spinor_matrix(data, self.d, self.u, self.l)

    def energy(self, f: SpinorField) -> float:
        mom = as_rep(f, Rep.MOMENTUM)
        PX, PY = self.grid.PXY
        QX, QY = self.grid.PXY_odd
        a = self.params.v0 * QX
        b = self.params.v1 * QY
        phi1, phi2 = mom.data
        dens = mom.density()
        kin = 0.5 * (PX**2 + PY**2) * dens + 2 * np.real(np.conj(phi1) * (a - 1j * b) * phi2)
        e = float(kin.sum() * self.grid.weight(Rep.MOMENTUM))
        return e + self._position_energy(as_rep(f, Rep.POSITION))


def born_huang_array(grid: GridSpec) -> np.ndarray:
    """``1/(8 p^2)`` with ``p^2`` floored at the smallest nonzero grid spacing squared."""
    PX, PY = grid.PXY
    floor = min(grid.dpx, grid.dpy) ** 2
    return 1.0 / (8.0 * np.maximum(PX**2 + PY**2, floor))


class SingleSurfaceStepper(_Stepper):
    ncomp = 1

    def __init__(self, grid, params, scheme):
        super().__init__(grid, params, scheme)
        PX, PY = grid.PXY
        self.surface = aps((PX, PY), params, -1)
        if params.born_huang_on:
            self.surface = self.surface + born_huang_array(grid)
        self.kphase = np.exp(-1j * self.surface * scheme.dt)
        self._gm = np.array([[params.g11]])

    @property
    def nonlinear(self):
        return bool(self.params.g11)

    def _nonlinear(self, data, h):
        _nonlinear_scalar(data, self.vtrap, self.params.g11, h)

    def momentum_factor(self, data):
        _mul_phase(data, self.kphase)

    def energy(self, f):
        mom = as_rep(f, Rep.MOMENTUM)
        e = float(np.sum(self.surface * mom.density()) * self.grid.weight(Rep.MOMENTUM))
        return e + self._position_energy(as_rep(f, Rep.POSITION))


class TofStepper(_Stepper):
    """Ballistic flight: trap and lasers off; mean field kept if ``g11..g12`` nonzero."""

    _trap = False

    def __init__(self, grid, params, scheme):
        super().__init__(grid, params, scheme)
        PX, PY = grid.PXY
        self.p2half = 0.5 * (PX**2 + PY**2)
        self.kphase = np.exp(-1j * self.p2half * scheme.dt)
        self._gm = params.gmat

    def _nonlinear(self, data, h):
        if data.shape[0] == 2:
            p = self.params
            _nonlinear_spinor(data, self.vtrap, p.g11, p.g12, p.g22, h)
        else:
            _nonlinear_scalar(data, self.vtrap, self.params.g11, h)

    def momentum_factor(self, data):
        _mul_phase(data, self.kphase)

    def advance(self, data, n):
        if n > 0 and not self.nonlinear:
            # kinetic-only flow is diagonal in p: n steps in one multiply
            w = fft_workers()
            k = sfft.fft2(np.array(data, dtype=complex), workers=w)
            k *= np.exp(-1j * self.p2half * (n * self.scheme.dt))
            return sfft.ifft2(k, workers=w, overwrite_x=True)
        return super().advance(data, n)

    def energy(self, f):
        mom = as_rep(f, Rep.MOMENTUM)
        e = float(np.sum(self.p2half * mom.density()) * self.grid.weight(Rep.MOMENTUM))
        pos = as_rep(f, Rep.POSITION)
        gm = self._gm if pos.ncomp == 2 else np.array([[self.params.g11]])
        rho = pos.data.real**2 + pos.data.imag**2
        w = self.grid.weight(Rep.POSITION)
        for i in range(rho.shape[0]):
            for j in range(rho.shape[0]):
                if gm[i, j]:
                    e += 0.5 * gm[i, j] * float(np.sum(rho[i] * rho[j]) * w)
        return e


_STEPPERS = {
    Engine.FULL: FullStepper,
    Engine.SINGLE_SURFACE: SingleSurfaceStepper,
    Engine.TOF: TofStepper,
}


def make_stepper(engine, grid, params, scheme) -> _Stepper:
    return _STEPPERS[Engine(engine)](grid, params, scheme)


# ---------------------------------------------------------------- run state


@dataclass
class MonitorRecord:
    tau: float
    norm: float
    energy: float
    edge_mass: float


@dataclass
class RunState:
    """A field being evolved by one engine, with conservation monitors."""

    field: SpinorField
    params: ModelParams
    scheme: StepScheme = field(default_factory=StepScheme)
    engine: Engine = Engine.FULL
    tau: float = 0.0
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    steps: int = 0
    records: list = field(default_factory=list)
    flags: set = field(default_factory=set)

    def __post_init__(self):
        self.engine = Engine(self.engine)
        self.field = as_rep(self.field, Rep.POSITION)
        need = 1 if self.engine is Engine.SINGLE_SURFACE else None
        if need and self.field.ncomp != need:
            raise GridError("single-surface engine needs a scalar field")
        if self.engine is Engine.FULL and self.field.ncomp != 2:
            raise GridError("full engine needs a two-component field")
        self._stepper = make_stepper(self.engine, self.field.grid, self.params, self.scheme)
        if not self.records:
            self._record()

    @property
    def stepper(self) -> _Stepper:
        return self._stepper

    @property
    def norm0(self) -> float:
        return self.records[0].norm

    @property
    def energy0(self) -> float:
        return self.records[0].energy

    def energy(self) -> float:
        return self._stepper.energy(self.field)

    def _record(self):
        f = self.field
        rec = MonitorRecord(self.tau, f.norm(), self._stepper.energy(f),
                            edge_mass(f, self.monitor.edge_width))
        self.records.append(rec)
        problems = []
        if not np.isfinite(rec.norm):
            problems.append("non_finite")
        elif self.records and abs(rec.norm - self.records[0].norm) > self.monitor.norm_tol:
            problems.append("norm_drift")
        if rec.edge_mass > self.monitor.edge_tol:
            problems.append("edge_mass")
        for p in problems:
            if p not in self.flags:
                log.warning("%s engine: %s at tau=%.4g", self.engine.value, p, self.tau)
            self.flags.add(p)
        if problems and self.monitor.strict:
            raise MonitoredFailure(f"{', '.join(problems)} at tau={self.tau:.6g}")

    def advance(self, n: int) -> "RunState":
        """Take ``n`` steps, sampling monitors on the configured cadence."""
        every = max(1, self.monitor.every)
        while n > 0:
            todo = min(n, every - self.steps % every)
            self.field = SpinorField(self.field.grid, Rep.POSITION,
                                     self._stepper.advance(self.field.data, todo))
            self.steps += todo
            self.tau = self.steps * self.scheme.dt + self.records[0].tau
            n -= todo
            if self.steps % every == 0:
                self._record()
        return self

    def evolve(self, duration: float) -> "RunState":
        return self.advance(self.scheme.steps_for(duration))

    def finish(self) -> "RunState":
        """Record a final monitor sample if the last step was off-cadence."""
        if self.records[-1].tau != self.tau:
            self._record()
        return self

    def max_norm_drift(self) -> float:
        return max(abs(r.norm - self.norm0) for r in self.records)

    def max_energy_drift(self) -> float:
        e0 = self.energy0
        return max(abs(r.energy - e0) for r in self.records) / max(abs(e0), 1e-300)


def step_full(state: RunState) -> RunState:
    if state.engine is not Engine.FULL:
        raise ValueError("state is not driven by the full engine")
    return state.advance(1)


def step_single_surface(state: RunState) -> RunState:
    if state.engine is not Engine.SINGLE_SURFACE:
        raise ValueError("state is not driven by the single-surface engine")
    return state.advance(1)


def step_tof(state: RunState) -> RunState:
    if state.engine is not Engine.TOF:
        raise ValueError("state is not driven by the time-of-flight engine")
    return state.advance(1)


# ---------------------------------------------------------------- dense oracle

DENSE_MAX_POINTS = 48


def _dft_matrix(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.exp(-1j * np.outer(p, x)) / np.sqrt(len(x))


def dense_hamiltonian(grid: GridSpec, params: ModelParams) -> np.ndarray:
    """Full single-particle Hamiltonian as a ``2 nx ny`` square matrix.

    Derivatives are spectral: ``P = F^H diag(p) F`` with the explicit DFT
    matrix ``F``, so the matrix is exact for band-limited grid functions.
    Basis order is (component, ix, iy).
    """
    if max(grid.nx, grid.ny) > DENSE_MAX_POINTS:
        raise GridError(f"dense oracle refuses grids above {DENSE_MAX_POINTS} points per axis")
    Fx = _dft_matrix(grid.x, grid.px)
    Fy = _dft_matrix(grid.y, grid.py)
    px1 = Fx.conj().T @ np.diag(grid.px_odd) @ Fx
    py1 = Fy.conj().T @ np.diag(grid.py_odd) @ Fy
    tx1 = Fx.conj().T @ np.diag(0.5 * grid.px**2) @ Fx
    ty1 = Fy.conj().T @ np.diag(0.5 * grid.py**2) @ Fy
    ix, iy = np.eye(grid.nx), np.eye(grid.ny)
    Px = np.kron(px1, iy)
    Py = np.kron(ix, py1)
    h0 = np.kron(tx1, iy) + np.kron(ix, ty1)
    if params.trap_on:
        X, Y = grid.XY
        h0 = h0 + np.diag((0.5 * (X**2 + Y**2)).ravel())
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    return np.kron(np.eye(2), h0) + params.v0 * np.kron(sx, Px) + params.v1 * np.kron(sy, Py)


def dense_oracle_evolve(f: SpinorField, params: ModelParams, tau: float) -> SpinorField:
    """``exp(-i H tau) f`` by Hermitian eigendecomposition (linear model only)."""
    if params.interacting:
        raise ValueError("dense oracle handles the linear model only (g = 0)")
    if f.ncomp != 2:
        raise GridError("dense oracle expects a two-component field")
    H = dense_hamiltonian(f.grid, params)
    w, V = scipy.linalg.eigh(H)
    pos = as_rep(f, Rep.POSITION)
    c = V.conj().T @ pos.data.ravel()
    out = V @ (np.exp(-1j * w * tau) * c)
    return SpinorField(f.grid, Rep.POSITION, out.reshape(pos.data.shape))


def l2_distance(a: SpinorField, b: SpinorField) -> float:
    pa, pb = as_rep(a, Rep.POSITION), as_rep(b, Rep.POSITION)
    diff = pa.data - pb.data
    return float(np.sqrt(np.sum(np.abs(diff) ** 2) * pa.grid.weight(Rep.POSITION)))
