"""Uniform 2D position grid, its conjugate momentum grid, and spinor fields.

Fourier convention (the single place it is defined)
---------------------------------------------------
Position data ``psi(x_j, y_k)`` lives on ``x_j = -Lx + j*dx``.  Momentum data
is the unitary continuous transform sampled on the FFT-ordered grid

    Phi(p) = 1/(2*pi) * sum_jk psi(x_j, y_k) exp(-i (p_x x_j + p_y y_k)) dx dy

so ``sum |psi|^2 dx dy == sum |Phi|^2 dpx dpy`` exactly (Parseval).  The
kernel is ``exp(-i x.p)``, i.e. a plane wave ``exp(+i p0.x)`` has mean
momentum ``+p0``.  Internally this is an orthonormal FFT times a constant
scale and the checkerboard phase ``(-1)^(j+k)`` from the grid offset.

The Nyquist momentum ``-pi/dx`` has no partner ``+pi/dx`` on the grid.  Even
operators (``p^2``) use it as is; odd operators (``p``, spin-orbit coupling)
treat it as zero, which keeps the discrete flow symmetric under ``p -> -p``.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


def fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("SOMB_THREADS", "1")))
    except ValueError:
        return 1


class GridError(ValueError):
    pass


class RepresentationError(RuntimeError):
    """Operation called on a field in the wrong representation."""


class PropagationError(FloatingPointError):
    """Non-finite values encountered in a field."""


class Rep(enum.Enum):
    POSITION = "position"
    MOMENTUM = "momentum"


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Square-cell periodic box ``[-Lx, Lx) x [-Ly, Ly)`` with ``nx x ny`` points.

    Arrays are indexed ``[ix, iy]`` (x along axis 0).
    """

    nx: int = 256
    ny: int = 256
    Lx: float = 16.0
    Ly: float = 16.0

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 8 or not _is_pow2(int(n)):
                raise GridError(f"{name}={n!r}: must be a power of two >= 8")
        for name in ("Lx", "Ly"):
            if not np.isfinite(getattr(self, name)) or getattr(self, name) <= 0:
                raise GridError(f"{name} must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return 2.0 * self.Lx / self.nx

    @property
    def dy(self) -> float:
        return 2.0 * self.Ly / self.ny

    @property
    def dpx(self) -> float:
        return np.pi / self.Lx

    @property
    def dpy(self) -> float:
        return np.pi / self.Ly

    @property
    def pmax_x(self) -> float:
        return np.pi / self.dx

    @property
    def pmax_y(self) -> float:
        return np.pi / self.dy

    def weight(self, rep: Rep) -> float:
        """Quadrature weight of one grid cell in the given representation."""
        if rep is Rep.POSITION:
            return self.dx * self.dy
        return self.dpx * self.dpy

    @cached_property
    def x(self) -> np.ndarray:
        return -self.Lx + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return -self.Ly + self.dy * np.arange(self.ny)

    @cached_property
    def px(self) -> np.ndarray:
        """Momentum axis in FFT (wrap-around) order."""
        return 2 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    @cached_property
    def py(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)

    @cached_property
    def px_odd(self) -> np.ndarray:
        """Momentum axis for odd operators: the unpaired Nyquist entry is zero."""
        p = self.px.copy()
        p[self.nx // 2] = 0.0
        return p

    @cached_property
    def py_odd(self) -> np.ndarray:
        p = self.py.copy()
        p[self.ny // 2] = 0.0
        return p

    @cached_property
    def PXY_odd(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.px_odd, self.py_odd, indexing="ij")

    @cached_property
    def XY(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def PXY(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.px, self.py, indexing="ij")

    @cached_property
    def _kspace_phase(self) -> np.ndarray:
        # (-1)^(kx + ky): shift of the origin from x=0 to x=-L
        kx = np.fft.fftfreq(self.nx) * self.nx
        ky = np.fft.fftfreq(self.ny) * self.ny
        s = np.where((kx[:, None] + ky[None, :]) % 2 == 0, 1.0, -1.0)
        return s.astype(complex)

    @property
    def _kspace_scale(self) -> float:
        # ortho-FFT coefficients -> Phi sampled on the p grid
        return np.sqrt(self.dx * self.dy / (self.dpx * self.dpy))

    def check_resolves(self, p_radius: float) -> None:
        """Raise if the momentum grid cannot hold a ring of radius ``p_radius``."""
        if min(self.pmax_x, self.pmax_y) <= p_radius:
            raise GridError(
                f"momentum cutoff {min(self.pmax_x, self.pmax_y):.3f} does not exceed "
                f"required radius {p_radius:.3f}; refine dx or dy"
            )

    def sorted_momentum_axes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.fft.fftshift(self.px), np.fft.fftshift(self.py)


def fft_forward(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Position samples (..., nx, ny) -> momentum samples of Phi."""
    out = sfft.fft2(a, norm="ortho", workers=fft_workers())
    out *= grid._kspace_phase
    out *= grid._kspace_scale
    return out


def fft_inverse(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    out = a * (grid._kspace_phase / grid._kspace_scale)
    return sfft.ifft2(out, norm="ortho", workers=fft_workers(), overwrite_x=True)


@dataclass
class SpinorField:
    """One or two complex components on a grid, in a declared representation.

    ``data`` has shape ``(ncomp, nx, ny)``.  Two components are the spinor on
    the dark states; a single component is the scalar field used by the
    single-surface model.
    """

    grid: GridSpec
    rep: Rep
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim == 2:
            self.data = self.data[None]
        if self.data.ndim != 3 or self.data.shape[1:] != self.grid.shape:
            raise GridError(f"field shape {self.data.shape} does not match grid {self.grid.shape}")
        if self.data.shape[0] not in (1, 2):
            raise GridError("a field has one or two components")

    @classmethod
    def from_components(cls, grid, c1, c2=None, rep=Rep.POSITION):
        comps = [c1] if c2 is None else [c1, c2]
        return cls(grid, rep, np.stack([np.asarray(c, dtype=complex) for c in comps]))

    @property
    def ncomp(self) -> int:
        return self.data.shape[0]

    @property
    def c1(self) -> np.ndarray:
        return self.data[0]

    @property
    def c2(self) -> np.ndarray:
        if self.ncomp < 2:
            raise GridError("scalar field has no second component")
        return self.data[1]

    def copy(self) -> "SpinorField":
        return SpinorField(self.grid, self.rep, self.data.copy())

    def density(self) -> np.ndarray:
        """Component-summed density in the current representation."""
        return np.sum(self.data.real**2 + self.data.imag**2, axis=0)

    def norm(self) -> float:
        return float(self.density().sum() * self.grid.weight(self.rep))

    def normalized(self) -> "SpinorField":
        n = self.norm()
        if not np.isfinite(n) or n <= 0:
            raise PropagationError("cannot normalize a zero or non-finite field")
        return SpinorField(self.grid, self.rep, self.data / np.sqrt(n))

    def check_finite(self) -> None:
        if not np.all(np.isfinite(self.data)):
            raise PropagationError("non-finite values in field")


def to_momentum(f: SpinorField) -> SpinorField:
    if f.rep is not Rep.POSITION:
        raise RepresentationError("to_momentum expects a position-space field")
    return SpinorField(f.grid, Rep.MOMENTUM, fft_forward(f.data, f.grid))


def to_position(f: SpinorField) -> SpinorField:
    if f.rep is not Rep.MOMENTUM:
        raise RepresentationError("to_position expects a momentum-space field")
    return SpinorField(f.grid, Rep.POSITION, fft_inverse(f.data, f.grid))


def as_rep(f: SpinorField, rep: Rep) -> SpinorField:
    if f.rep is rep:
        return f
    return to_momentum(f) if rep is Rep.MOMENTUM else to_position(f)


class Observable(enum.Enum):
    X = "x"
    Y = "y"
    X2 = "x2"
    Y2 = "y2"
    PX = "px"
    PY = "py"
    PX2 = "px2"
    PY2 = "py2"


_OBS_TABLE = {
    Observable.X: (Rep.POSITION, 0, 1),
    Observable.Y: (Rep.POSITION, 1, 1),
    Observable.X2: (Rep.POSITION, 0, 2),
    Observable.Y2: (Rep.POSITION, 1, 2),
    Observable.PX: (Rep.MOMENTUM, 0, 1),
    Observable.PY: (Rep.MOMENTUM, 1, 1),
    Observable.PX2: (Rep.MOMENTUM, 0, 2),
    Observable.PY2: (Rep.MOMENTUM, 1, 2),
}


def expectation(f: SpinorField, obs: Observable | str) -> float:
    """Norm-weighted expectation of a coordinate or momentum moment.

    The field is transformed to the representation where ``obs`` is diagonal
    when needed; the input is not modified.  Odd momentum moments use the
    ``*_odd`` axes, so real fields have exactly zero mean momentum.
    """
    obs = Observable(obs)
    rep, axis, power = _OBS_TABLE[obs]
    g = as_rep(f, rep)
    g.check_finite()
    dens = g.density()
    if rep is Rep.POSITION:
        coord = g.grid.x if axis == 0 else g.grid.y
    else:
        if power % 2:
            coord = g.grid.px_odd if axis == 0 else g.grid.py_odd
        else:
            coord = g.grid.px if axis == 0 else g.grid.py
    marg = dens.sum(axis=1 - axis)
    total = marg.sum()
    return float(np.dot(marg, coord**power) / total)


def edge_mass(f: SpinorField, width: int = 4) -> float:
    """Probability in the outermost ``width`` cells along each border (position rep)."""
    g = as_rep(f, Rep.POSITION)
    d = g.density()
    inner = d[width:-width, width:-width].sum()
    return float((d.sum() - inner) * g.grid.weight(Rep.POSITION))


def embed(f: SpinorField, big: GridSpec) -> SpinorField:
    """Zero-pad a position field into a larger box with the same cell size."""
    small = f.grid
    if not (np.isclose(big.dx, small.dx) and np.isclose(big.dy, small.dy)):
        raise GridError("embedding requires identical dx and dy")
    if big.nx < small.nx or big.ny < small.ny:
        raise GridError("target grid is smaller than the source grid")
    g = as_rep(f, Rep.POSITION)
    out = np.zeros((g.ncomp,) + big.shape, dtype=complex)
    ox = (big.nx - small.nx) // 2
    oy = (big.ny - small.ny) // 2
    out[:, ox:ox + small.nx, oy:oy + small.ny] = g.data
    return SpinorField(big, Rep.POSITION, out)
