"""Physical parameters, initial wave packets, adiabatic surfaces and gauge fields.

All quantities are dimensionless: lengths in oscillator lengths, energies in
units of the trap quantum, time in inverse trap frequency.  The single-particle
Hamiltonian is

    H = p^2/2 + (x^2 + y^2)/2 + v0 p_x sigma_x + v1 p_y sigma_y

plus the mean-field term ``sum_j g_ij |psi_j|^2`` on component ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridError, GridSpec, Rep, SpinorField

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

#: singular-point guard for quantities undefined at the conical intersection
EPS_CI = 1e-12

#: sign of the plane-wave phase used for the initial boost.  With +1 the
#: packet is ``exp(+i p0.x)`` and its mean momentum is ``+p0`` under the
#: ``exp(-i x.p)`` transform kernel (see grid module).  Writing the phase as
#: ``exp(-i p0.x)`` would put the packet at ``-p0``, where the spinor
#: ``(1, -1)/sqrt(2)`` lies on the upper surface instead of the sombrero.
PLANE_WAVE_SIGN = +1

#: Taylor switch-over for sin(a)/a in the kinetic factor
_SINC_SERIES_BELOW = 1e-4


class SingularPointError(ValueError):
    """Quantity requested at (or numerically at) the conical intersection."""


@dataclass(frozen=True)
class ModelParams:
    v0: float = 0.0
    v1: float = 0.0
    g11: float = 0.0
    g22: float = 0.0
    g12: float = 0.0
    trap_on: bool = True
    born_huang_on: bool = False

    def __post_init__(self):
        if self.v0 < 0 or self.v1 < 0:
            raise ValueError("spin-orbit speeds must be non-negative")
        for name in ("v0", "v1", "g11", "g22", "g12"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def isotropic(cls, v: float, g: float = 0.0, **kw) -> "ModelParams":
        """Equal speeds ``v0 = v1 = v`` and ``g11 = g22 = g``, ``g12 = 0``."""
        return cls(v0=v, v1=v, g11=g, g22=g, g12=0.0, **kw)

    @property
    def zeeman(self) -> float:
        return 0.0

    @property
    def gmat(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    @property
    def v(self) -> float:
        """Common speed; only meaningful when ``v0 == v1``."""
        if self.v0 != self.v1:
            raise ValueError("anisotropic model has no single speed")
        return self.v0

    @property
    def interacting(self) -> bool:
        return bool(self.g11 or self.g22 or self.g12)


@dataclass(frozen=True)
class GaussianSpec:
    """Minimum-uncertainty Gaussian with spinor amplitudes ``(a1, a2)``.

    ``px0, py0`` are the mean momenta of the packet (see ``PLANE_WAVE_SIGN``).
    """

    a1: complex = 1.0
    a2: complex = 0.0
    x0: float = 0.0
    y0: float = 0.0
    px0: float = 0.0
    py0: float = 0.0
    width: float = 1.0
    amplitudes_tol: float = field(default=1e-12, repr=False, compare=False)

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")
        s = abs(self.a1) ** 2 + abs(self.a2) ** 2
        if abs(s - 1.0) > self.amplitudes_tol:
            raise ValueError(f"|a1|^2 + |a2|^2 = {s!r}, expected 1")

    @classmethod
    def normalized(cls, a1, a2, **kw) -> "GaussianSpec":
        """Rescale the amplitudes so that ``|a1|^2 + |a2|^2 == 1``."""
        a1, a2 = complex(a1), complex(a2)
        s = np.sqrt(abs(a1) ** 2 + abs(a2) ** 2)
        if s == 0:
            raise ValueError("amplitudes cannot both vanish")
        return cls(a1=a1 / s, a2=a2 / s, **kw)


def _gaussian_profile(spec: GaussianSpec, grid: GridSpec) -> np.ndarray:
    X, Y = grid.XY
    margin = 3 * spec.width
    if (abs(spec.x0) + margin > grid.Lx) or (abs(spec.y0) + margin > grid.Ly):
        raise GridError("Gaussian does not fit in the box with a 3-width margin")
    # mass beyond the box edges for a separable Gaussian
    from math import erfc

    tail = 0.0
    for c, L in ((spec.x0, grid.Lx), (spec.y0, grid.Ly)):
        tail += 0.5 * (erfc((L - c) / spec.width) + erfc((L + c) / spec.width))
    if tail > 1e-10:
        raise GridError(f"Gaussian mass outside the box {tail:.2e} exceeds 1e-10")
    r2 = (X - spec.x0) ** 2 + (Y - spec.y0) ** 2
    phase = PLANE_WAVE_SIGN * (spec.px0 * X + spec.py0 * Y)
    return np.exp(1j * phase - r2 / (2 * spec.width**2)) / np.sqrt(np.pi * spec.width**2)


def make_initial(spec: GaussianSpec, grid: GridSpec) -> SpinorField:
    """Two-component Gaussian wave packet, normalized on the grid."""
    prof = _gaussian_profile(spec, grid)
    f = SpinorField(grid, Rep.POSITION, np.stack([spec.a1 * prof, spec.a2 * prof]))
    return f.normalized()


def make_initial_scalar(spec: GaussianSpec, grid: GridSpec) -> SpinorField:
    """Spatial profile of ``spec`` as a single-component field.

    Used as the starting state of the single-surface model; the spinor
    amplitudes are dropped.
    """
    return SpinorField(grid, Rep.POSITION, _gaussian_profile(spec, grid)[None]).normalized()


def soc_lambda(px, py, params: ModelParams):
    return np.hypot(params.v0 * np.asarray(px), params.v1 * np.asarray(py))


def aps(p, params: ModelParams, branch: int):
    """Adiabatic potential surface ``p^2/2 +/- lambda(p)``; ``branch`` is +1 or -1."""
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    px, py = p
    px, py = np.asarray(px, dtype=float), np.asarray(py, dtype=float)
    return 0.5 * (px**2 + py**2) + branch * soc_lambda(px, py, params)


def soc_matrix(p, params: ModelParams) -> np.ndarray:
    px, py = p
    a, b = params.v0 * px, params.v1 * py
    return np.array([[0, a - 1j * b], [a + 1j * b, 0]], dtype=complex)


def adiabatic_transform(p, params: ModelParams) -> np.ndarray:
    """Unitary ``U`` with ``U M U^dagger = diag(lambda, -lambda)``.

    Rows of ``U`` are the conjugated eigenvectors (upper branch first).  Each
    eigenvector is ``(1, +/- e^{i phi})/sqrt(2)``, so its first component is
    real and positive.
    """
    px, py = p
    a, b = params.v0 * px, params.v1 * py
    lam = np.hypot(a, b)
    if lam < EPS_CI:
        raise SingularPointError(f"degenerate spin-orbit term at p={p!r}")
    e = (a + 1j * b) / lam
    upper = np.array([1, e]) / np.sqrt(2)
    lower = np.array([1, -e]) / np.sqrt(2)
    return np.stack([upper.conj(), lower.conj()])


def kinetic_soc_arrays(px, py, params: ModelParams, dt: float, p2=None):
    """Entries of ``exp(-i [p^2/2 + v0 p_x s_x + v1 p_y s_y] dt)`` on arrays of p.

    Returns ``(d, u, l)``: the diagonal entry (equal for both components), the
    upper off-diagonal (row 1, column 2) and the lower off-diagonal.  ``p2``
    overrides ``px^2 + py^2`` in the kinetic phase, for grids whose odd
    operators use a different momentum than the even ones.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    a = params.v0 * px
    b = params.v1 * py
    lam = np.hypot(a, b)
    z = lam * dt
    small = np.abs(z) < _SINC_SERIES_BELOW
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(small, 0.0, np.sin(z) / np.where(small, 1.0, lam))
    z2 = z * z
    series = dt * (1 - z2 / 6 * (1 - z2 / 20 * (1 - z2 / 42)))
    s = np.where(small, series, s)
    if p2 is None:
        p2 = px**2 + py**2
    free = np.exp(-0.5j * np.asarray(p2, dtype=float) * dt)
    d = free * np.cos(z)
    u = -1j * free * s * (a - 1j * b)
    l = -1j * free * s * (a + 1j * b)
    return d, u, l


def kinetic_soc_factor(p, params: ModelParams, dt: float) -> np.ndarray:
    """2x2 propagator of kinetic energy plus spin-orbit coupling at one momentum."""
    d, u, l = kinetic_soc_arrays(p[0], p[1], params, dt)
    return np.array([[d, u], [l, d]], dtype=complex)


def gauge_fields(p) -> tuple[np.ndarray, float]:
    """Berry vector potential and Born-Huang scalar of the lower surface at ``p``."""
    px, py = float(p[0]), float(p[1])
    p2 = px * px + py * py
    if np.sqrt(p2) < EPS_CI:
        raise SingularPointError("gauge fields are singular at p = 0")
    return np.array([-py, px]) / (2 * p2), 1.0 / (8 * p2)


def nonabelian_commutator(params: ModelParams) -> np.ndarray:
    """``[A_x, A_y]`` for the matrix potential ``A = (v0 sigma_x, v1 sigma_y)``."""
    ax = params.v0 * SIGMA_X
    ay = params.v1 * SIGMA_Y
    return ax @ ay - ay @ ax
