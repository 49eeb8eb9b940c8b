"""Observables: spinor density matrix, Bloch path, geometric phase, phonon numbers.

Bloch vector convention: ``rho = [[P1, C], [C*, P2]] = (I + r.sigma)/2`` so
``r = (2 Re C, -2 Im C, P1 - P2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grid import Observable, Rep, SpinorField, as_rep, expectation


class GeodesicAmbiguityError(ValueError):
    """Two path points are antipodal, so the connecting geodesic is undefined."""


class UndersampledPathError(ValueError):
    """Consecutive eigenvectors overlap too little to be tracked reliably."""


def wrap_phase(a):
    """Map angles into (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + np.pi, 2 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return w if w.ndim else float(w)


# ------------------------------------------------------------------ density matrix


@dataclass(frozen=True)
class BlochSample:
    tau: float
    P1: float
    P2: float
    C: complex

    @property
    def r(self) -> np.ndarray:
        return np.array([2 * self.C.real, -2 * self.C.imag, self.P1 - self.P2])

    @property
    def purity(self) -> float:
        return float(np.linalg.norm(self.r))

    @property
    def rho(self) -> np.ndarray:
        return np.array([[self.P1, self.C], [np.conj(self.C), self.P2]])


def reduced_density(f: SpinorField) -> np.ndarray:
    """2x2 spinor density matrix ``[[<1|1>, <1|2>], [<2|1>, <2|2>]]``."""
    if f.ncomp != 2:
        raise ValueError("reduced density needs a two-component field")
    w = f.grid.weight(f.rep)
    a, b = f.data
    p1 = float(np.vdot(a, a).real * w)
    p2 = float(np.vdot(b, b).real * w)
    c = complex(np.vdot(a, b) * w)
    return np.array([[p1, c], [np.conj(c), p2]])


def bloch_sample(f: SpinorField, tau: float = 0.0) -> BlochSample:
    rho = reduced_density(f)
    return BlochSample(tau, float(rho[0, 0].real), float(rho[1, 1].real), complex(rho[0, 1]))


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    c = rho[0, 1]
    return np.array([2 * c.real, -2 * c.imag, (rho[0, 0] - rho[1, 1]).real])


def populations_series(samples) -> np.ndarray:
    """Array of shape (n, 3): tau, P1, P2."""
    return np.array([[s.tau, s.P1, s.P2] for s in samples])


# ------------------------------------------------------------------ geometric phase


@dataclass
class BerryTrace:
    times: np.ndarray
    gamma: np.ndarray  # wrapped into (-pi, pi]
    gamma_unwrapped: np.ndarray
    eigenvalues: np.ndarray  # (n, 2): tracked, other
    overlaps: np.ndarray  # |<phi_k|phi_{k+1}>|, length n-1
    degenerate: list = field(default_factory=list)

    @property
    def min_overlap(self) -> float:
        return float(self.overlaps.min()) if len(self.overlaps) else 1.0


def berry_phase(rhos, times=None, *, purity_tol=1e-6, min_overlap=0.9, degeneracy_tol=1e-9,
                eigvecs=None) -> BerryTrace:
    """Non-cyclic geometric phase of the dominant eigenvector of ``rho(tau)``.

    The eigenvector is followed by maximal overlap with its predecessor and

        gamma_N = arg<phi_0|phi_N> - sum_k arg<phi_k|phi_{k+1}>

    which is invariant under any rephasing of the individual ``phi_k``.
    ``eigvecs`` may supply precomputed (n, 2, 2) eigenvector columns, used by
    the gauge-invariance tests; by default they come from ``eigh``.
    """
    rhos = np.asarray(rhos, dtype=complex)
    n = len(rhos)
    if n == 0:
        raise ValueError("empty path")
    times = np.arange(n, dtype=float) if times is None else np.asarray(times, dtype=float)
    vals, vecs = np.linalg.eigh(rhos)
    if eigvecs is not None:
        vecs = np.asarray(eigvecs, dtype=complex)
    lam0 = vals[0, 1]
    if abs(lam0 - 1.0) > purity_tol:
        raise ValueError(f"initial state is not pure (largest eigenvalue {lam0:.3g})")
    phis = np.empty((n, 2), dtype=complex)
    lam = np.empty((n, 2))
    phis[0] = vecs[0][:, 1]
    lam[0] = vals[0, 1], vals[0, 0]
    overlaps = np.empty(max(n - 1, 0))
    degenerate = []
    for k in range(1, n):
        prev = phis[k - 1]
        ov = np.abs(prev.conj() @ vecs[k])
        j = int(np.argmax(ov))
        phis[k] = vecs[k][:, j]
        lam[k] = vals[k, j], vals[k, 1 - j]
        overlaps[k - 1] = ov[j]
        if abs(vals[k, 1] - vals[k, 0]) < degeneracy_tol:
            degenerate.append(k)
        if ov[j] < min_overlap:
            raise UndersampledPathError(
                f"eigenvector overlap {ov[j]:.3f} between samples {k - 1} and {k}")
    links = np.einsum("ki,ki->k", phis[:-1].conj(), phis[1:])
    cum = np.concatenate([[0.0], np.cumsum(np.angle(links))])
    closing = np.angle(phis[0].conj() @ phis.T)
    raw = closing - cum
    gamma = wrap_phase(raw)
    return BerryTrace(times, np.atleast_1d(gamma), np.unwrap(np.atleast_1d(gamma)), lam,
                      overlaps, degenerate)


# ------------------------------------------------------------------ solid angles


def triangle_solid_angle(a, b, c) -> float:
    """Signed solid angle of the geodesic triangle a -> b -> c on the unit sphere."""
    num = np.dot(a, np.cross(b, c))
    den = 1.0 + np.dot(a, b) + np.dot(b, c) + np.dot(c, a)
    return float(2.0 * np.arctan2(num, den))


def _reduce_4pi(om: float) -> float:
    r = np.mod(om + 2 * np.pi, 4 * np.pi) - 2 * np.pi
    return float(2 * np.pi if r <= -2 * np.pi + 1e-15 else r)


def _unit_path(path, tol):
    n = np.asarray(path, dtype=float)
    if n.ndim != 2 or n.shape[1] != 3:
        raise ValueError("path must have shape (n, 3)")
    norms = np.linalg.norm(n, axis=1)
    if np.any(np.abs(norms - 1) > tol):
        raise ValueError("path points must be unit vectors")
    return n


def _check_edges(n, antipode_tol):
    if len(n) > 1 and np.any(np.linalg.norm(n[1:] + n[:-1], axis=1) < antipode_tol):
        raise GeodesicAmbiguityError("consecutive path points are antipodal")
    if np.linalg.norm(n[-1] + n[0]) < antipode_tol:
        raise GeodesicAmbiguityError("path end point is antipodal to its start")


def solid_angle(path, *, unit_tol=1e-9, antipode_tol=1e-9) -> float:
    """Solid angle enclosed by the path closed with the shortest geodesic.

    Sum of signed triangles from an apex over every edge, the closing edge
    included.  The apex is ``path[0]`` (the usual fan) unless some path point
    is antipodal to it; then a coordinate axis far from all antipodes is used,
    which changes the sum only by multiples of 4 pi.  Result in (-2 pi, 2 pi].
    """
    n = _unit_path(path, unit_tol)
    if len(n) < 2:
        return 0.0
    _check_edges(n, antipode_tol)
    apex = n[0]
    if np.min(np.linalg.norm(n + apex, axis=1)) < 1e-6:
        cands = np.vstack([np.eye(3), -np.eye(3)])
        score = [np.min(np.linalg.norm(n + c, axis=1)) for c in cands]
        apex = cands[int(np.argmax(score))]
    closed = np.vstack([n, n[:1]])
    total = sum(triangle_solid_angle(apex, closed[k], closed[k + 1]) for k in range(len(n)))
    return _reduce_4pi(total)


def solid_angle_series(path, *, unit_tol=1e-9, antipode_tol=1e-9) -> np.ndarray:
    """Solid angle of every prefix ``path[:k+1]`` (fan from ``path[0]``)."""
    n = _unit_path(path, unit_tol)
    if len(n) > 1 and np.any(np.linalg.norm(n[1:] + n[:-1], axis=1) < antipode_tol):
        raise GeodesicAmbiguityError("consecutive path points are antipodal")
    out = np.zeros(len(n))
    acc = 0.0
    for k in range(1, len(n)):
        acc += triangle_solid_angle(n[0], n[k - 1], n[k])
        out[k] = _reduce_4pi(acc)
    return out


def relation_check(berry: BerryTrace, omegas, purities, *, min_purity=0.9) -> dict:
    """Residual of ``gamma = -Omega/2`` (mod 2 pi) over near-pure samples."""
    omegas = np.asarray(omegas, dtype=float)
    purities = np.asarray(purities, dtype=float)
    mask = purities > min_purity
    res = np.abs(wrap_phase(berry.gamma + 0.5 * omegas))
    res = np.atleast_1d(res)
    return {
        "max_residual": float(res[mask].max()) if mask.any() else float("nan"),
        "median_residual": float(np.median(res[mask])) if mask.any() else float("nan"),
        "samples_used": int(mask.sum()),
        "samples_excluded": int((~mask).sum()),
        "residuals": np.where(mask, res, np.nan),
    }


# ------------------------------------------------------------------ phonons, distributions


def phonon_numbers(f: SpinorField) -> tuple[float, float]:
    """``n_i = <p_i^2>/2 + <i^2>/2`` for i = x, y."""
    pos = as_rep(f, Rep.POSITION)
    mom = as_rep(f, Rep.MOMENTUM)
    nx = 0.5 * (expectation(mom, Observable.PX2) + expectation(pos, Observable.X2))
    ny = 0.5 * (expectation(mom, Observable.PY2) + expectation(pos, Observable.Y2))
    return nx, ny


@dataclass
class MomentumDistribution:
    px: np.ndarray  # increasing
    py: np.ndarray
    density: np.ndarray  # indexed [ipx, ipy]
    dpx: float
    dpy: float

    def integral(self) -> float:
        return float(self.density.sum() * self.dpx * self.dpy)


def momentum_distribution(f: SpinorField) -> MomentumDistribution:
    """Component-summed momentum density on monotone axes."""
    mom = as_rep(f, Rep.MOMENTUM)
    g = mom.grid
    px, py = g.sorted_momentum_axes()
    dens = np.fft.fftshift(mom.density())
    return MomentumDistribution(px, py, dens, g.dpx, g.dpy)


def position_distribution(f: SpinorField):
    pos = as_rep(f, Rep.POSITION)
    return pos.grid.x, pos.grid.y, pos.density()


def ring_profile(x, y, density, radius, nsamples=720):
    """Bilinear samples of ``density`` on the circle of ``radius``.

    Returns ``(theta, values)`` with ``theta`` in [0, 2 pi).
    """
    theta = 2 * np.pi * np.arange(nsamples) / nsamples
    interp = RegularGridInterpolator((x, y), density, method="linear",
                                     bounds_error=False, fill_value=0.0)
    pts = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    return theta, interp(pts)


def node_contrast(dist: MomentumDistribution, radius: float, *, nsamples=720,
                  probe_deg=30.0) -> float:
    """Darkness of the ring at azimuth pi relative to its bright neighbours.

    ``(max_window - rho(pi)) / max_ring`` where ``max_window`` is the largest
    ring value within ``probe_deg`` of pi.  About 1 for a node at pi flanked
    by bright fringes, 0 when pi itself is the local maximum.  Fringes wider
    than ``2 probe_deg`` put the neighbouring maxima outside the window.
    """
    if nsamples % 2:
        raise ValueError("nsamples must be even so that pi is sampled")
    theta, vals = ring_profile(dist.px, dist.py, dist.density, radius, nsamples)
    ring_max = vals.max()
    if ring_max <= 0:
        return 0.0
    at_pi = vals[nsamples // 2]
    win = np.abs(theta - np.pi) <= np.deg2rad(probe_deg) + 1e-12
    return float((vals[win].max() - at_pi) / ring_max)


def azimuthal_profile(dist: MomentumDistribution, radius: float, *, half_band=2.0,
                      nradii=9, nsamples=720):
    """Density integrated over the annulus ``|p - radius| <= half_band``.

    Returns ``(theta, values)`` with ``theta`` in (-pi, pi].
    """
    radii = np.linspace(max(radius - half_band, 0.0), radius + half_band, nradii)
    w = np.full(nradii, radii[1] - radii[0])
    w[[0, -1]] *= 0.5
    total = 0.0
    for r, wr in zip(radii, w):
        theta, vals = ring_profile(dist.px, dist.py, dist.density, r, nsamples)
        total = total + wr * r * vals
    theta = np.where(theta > np.pi, theta - 2 * np.pi, theta)
    order = np.argsort(theta)
    return theta[order], np.asarray(total)[order]


@dataclass(frozen=True)
class AzimuthalWidth:
    """Gaussian width of the azimuthal profile around ``theta = 0``.

    ``width`` follows the amplitude convention ``exp(-theta^2 / (2 width^2))``
    of the field, i.e. ``width^2 = 2 <theta^2>``; ``back_mass`` is the share
    of the profile with ``|theta| > pi/2``.
    """

    width: float
    back_mass: float


def azimuthal_width(theta, values) -> AzimuthalWidth:
    theta = np.asarray(theta, dtype=float)
    values = np.asarray(values, dtype=float)
    tot = values.sum()
    if tot <= 0:
        raise ValueError("empty azimuthal profile")
    w = values / tot
    return AzimuthalWidth(float(np.sqrt(2 * np.sum(w * theta**2))),
                          float(w[np.abs(theta) > np.pi / 2].sum()))


def collapse_time(times, widths: list[AzimuthalWidth], *, back_tol=1e-3) -> float:
    """Time at which the azimuthal width reaches the full circle ``2 pi``.

    Free angular spreading gives ``width^2 = a + b tau^2``; the fit uses only
    samples whose tails have not yet wrapped (``back_mass < back_tol``) and is
    solved for ``width = 2 pi``.
    """
    times = np.asarray(times, dtype=float)
    d2 = np.array([w.width**2 for w in widths])
    ok = np.array([w.back_mass < back_tol for w in widths]) & (times > 0)
    if ok.sum() < 3:
        raise ValueError("need at least three unwrapped samples to fit the spreading law")
    a, b = np.linalg.lstsq(np.column_stack([np.ones(ok.sum()), times[ok] ** 2]), d2[ok],
                           rcond=None)[0]
    if b <= 0:
        raise ValueError("azimuthal width is not growing")
    return float(np.sqrt(max((2 * np.pi) ** 2 - a, 0.0) / b))
