"""End-to-end experiment runners and their result bundles.

Every runner takes a :class:`ScenarioConfig` and returns a :class:`Bundle`
holding time series, field snapshots and a summary dictionary.  Nothing is
written to disk unless :func:`write_bundle` is called.  Bundles contain no
timestamps or host data, so the same config reproduces identical files.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    azimuthal_profile, azimuthal_width, berry_phase, bloch_sample, collapse_time,
    momentum_distribution, node_contrast, phonon_numbers, relation_check, solid_angle_series,
    MomentumDistribution,
)
from .config import ConfigError, ScenarioConfig, dump_config
from .grid import GridSpec, Rep, SpinorField, as_rep, embed, expectation, fft_workers, to_momentum
from .io import SERIES_COLUMNS, write_series, write_snapshot
from .model import PLANE_WAVE_SIGN, GaussianSpec, ModelParams, make_initial, make_initial_scalar
from .propagators import Engine, RunState, StepScheme

log = logging.getLogger(__name__)

# trap frequency omega / 2 pi = 40 Hz sets the time unit 1/omega
TIME_UNIT_SECONDS = 1.0 / (2 * math.pi * 40.0)

CONVENTIONS = {
    "fourier_kernel": "exp(-i p.x), unitary; momentum data is the continuous transform",
    "plane_wave_sign": PLANE_WAVE_SIGN,
    "initial_state": "(a1, a2) * pi^-1/2 / width * exp(-|r - r0|^2 / (2 width^2) + i p0.(r - r0))",
    "bloch_vector": "r = (2 Re C, -2 Im C, P1 - P2) with C = <1|2>",
    "lower_surface_spinor": "(1, -exp(i phi)) / sqrt(2) at momentum angle phi",
    "orientation": "cw/ccw refer to the sense of rotation of <p> in the (px, py) plane",
    "time_unit_seconds": TIME_UNIT_SECONDS,
}


@dataclass
class Series:
    columns: tuple
    rows: list = field(default_factory=list)

    def column(self, name) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)


@dataclass
class Bundle:
    scenario: str
    config: ScenarioConfig
    summary: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)  # name -> Series
    snapshots: dict = field(default_factory=dict)  # name -> (SpinorField, tau)
    runs: dict = field(default_factory=dict)  # name -> run metadata
    extras: dict = field(default_factory=dict, repr=False)  # in-memory analysis objects


# ------------------------------------------------------------------ helpers


def fit_dt(dt_max: float, duration: float, marks=()) -> tuple[float, int]:
    """Largest step ``<= dt_max`` that lands exactly on ``duration`` and on every mark.

    Marks must be rational fractions of ``duration`` (denominator up to 4096).
    Returns ``(dt, nsteps)``.
    """
    if not duration > 0:
        raise ConfigError("scenario.duration: must be positive to fit a time step")
    q = 1
    for m in marks:
        x = m / duration
        fr = Fraction(x).limit_denominator(4096)
        if abs(float(fr) - x) > 1e-12:
            raise ConfigError(f"time {m!r} is not a simple fraction of the duration {duration!r}")
        q = math.lcm(q, fr.denominator)
    m_steps = q * math.ceil(duration / (dt_max * q) - 1e-9)
    return duration / m_steps, m_steps


def _steps(t: float, dt: float) -> int:
    n = round(t / dt)
    if abs(n * dt - t) > 1e-9 * max(1.0, t):
        raise ConfigError(f"time {t!r} is not a multiple of the step {dt!r}")
    return n


def _initial(spec: GaussianSpec, grid: GridSpec, engine: str) -> SpinorField:
    return make_initial_scalar(spec, grid) if engine == "single_surface" else make_initial(spec, grid)


def _state(cfg: ScenarioConfig, engine: str, params=None, initial=None, dt=None, strict=None):
    scheme = cfg.scheme if dt is None else replace(cfg.scheme, dt=dt)
    f = _initial(initial or cfg.initial, cfg.grid, engine)
    return RunState(f, params or cfg.params, scheme, engine, monitor=cfg.monitor(strict))


def _run_meta(st: RunState, **extra) -> dict:
    g = st.field.grid
    out = {
        "engine": st.engine.value,
        "grid": {"nx": g.nx, "ny": g.ny, "Lx": g.Lx, "Ly": g.Ly},
        "scheme": {"kind": st.scheme.kind.value, "dt": st.scheme.dt,
                   "density_update": st.scheme.density_update.value},
        "params": {"v0": st.params.v0, "v1": st.params.v1, "g11": st.params.g11,
                   "g22": st.params.g22, "g12": st.params.g12, "trap": st.params.trap_on,
                   "born_huang": st.params.born_huang_on},
        "final_tau": st.tau,
        "steps": st.steps,
        "max_norm_drift": st.max_norm_drift(),
        "max_energy_drift": st.max_energy_drift(),
        "flags": sorted(st.flags),
    }
    out.update(extra)
    return out


def _flags(st: RunState) -> str:
    return "|".join(sorted(st.flags))


def _workers(njobs: int) -> int:
    return max(1, min(njobs, fft_workers()))


def _map(fn, jobs):
    """Run independent sub-runs, in worker processes when ``SOMB_THREADS > 1``."""
    jobs = list(jobs)
    n = _workers(len(jobs))
    if n == 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, *zip(*jobs)))


def _tag(engine: str, g: float) -> str:
    return f"{engine}_g{g:+.4g}"


def _with_g(p: ModelParams, g: float) -> ModelParams:
    return replace(p, g11=g, g22=g)


# ------------------------------------------------------------------ orbit-tracking runs


def _spin_sample(st: RunState) -> dict:
    f = st.field
    mom = to_momentum(f)
    s = bloch_sample(f, st.tau)
    nx, ny = phonon_numbers(f)
    return {
        "tau": st.tau, "P1": s.P1, "P2": s.P2, "rho": s.rho, "r": s.r,
        "px": expectation(mom, "px"), "py": expectation(mom, "py"),
        "x": expectation(f, "x"), "y": expectation(f, "y"),
        "n_x": nx, "n_y": ny, "norm": f.norm(), "energy": st.energy(), "flags": _flags(st),
    }


def _orbit_run(cfg: ScenarioConfig, initial: GaussianSpec, strict=None):
    """Evolve the full model for one measured orbit of ``<p>`` (or a fixed duration).

    The orbit ends when the unwrapped azimuth of ``<p>`` has turned by 2 pi;
    the crossing time is interpolated linearly between samples.
    """
    st = _state(cfg, "full", initial=initial, strict=strict)
    dt = st.scheme.dt
    nsample = max(1, round(cfg.sample_every / dt))
    horizon = cfg.duration if cfg.duration is not None else cfg.max_duration
    nmax = _steps(horizon, dt) if cfg.duration is not None else math.floor(horizon / dt + 1e-9)
    samples = [_spin_sample(st)]
    phi = [math.atan2(samples[0]["py"], samples[0]["px"])]
    period = None
    while st.steps < nmax:
        st.advance(min(nsample, nmax - st.steps))
        s = _spin_sample(st)
        samples.append(s)
        phi.append(math.atan2(s["py"], s["px"]))
        turn = np.unwrap(phi) - phi[0]
        if cfg.duration is None and abs(turn[-1]) >= 2 * np.pi:
            a, b = abs(turn[-2]), abs(turn[-1])
            t0, t1 = samples[-2]["tau"], samples[-1]["tau"]
            period = t0 + (2 * np.pi - a) / (b - a) * (t1 - t0)
            break
    st.finish()
    turn = np.unwrap(phi) - phi[0]
    sense = "ccw" if turn[-1] > 0 else "cw"
    return st, samples, {"period": period, "turn": float(turn[-1]), "sense": sense,
                         "sample_every": nsample * dt}


def _berry_analysis(samples) -> tuple[dict, Series]:
    rhos = np.array([s["rho"] for s in samples])
    times = np.array([s["tau"] for s in samples])
    trace = berry_phase(rhos, times)
    r = np.array([s["r"] for s in samples])
    rabs = np.linalg.norm(r, axis=1)
    units = r / np.maximum(rabs, 1e-300)[:, None]
    omegas = solid_angle_series(units, unit_tol=1e-6)
    rel = relation_check(trace, omegas, rabs)
    rows = []
    for k, s in enumerate(samples):
        rows.append([s["tau"], s["P1"], s["P2"], r[k, 0], r[k, 1], r[k, 2], rabs[k],
                     trace.gamma[k], trace.gamma_unwrapped[k], s["n_x"], s["n_y"], s["norm"],
                     s["energy"], s["flags"]])
    summary = {
        "relation_max_residual": rel["max_residual"],
        "relation_samples_excluded": rel["samples_excluded"],
        "min_eigenvector_overlap": trace.min_overlap,
        "degenerate_samples": len(trace.degenerate),
        "r_abs_initial": float(rabs[0]),
        "r_abs_min": float(rabs.min()),
    }
    return {"trace": trace, "omega": omegas, "r_abs": rabs, "times": times, **summary}, \
        Series(SERIES_COLUMNS, rows)


def _orbit_series(samples) -> Series:
    cols = ("tau", "px", "py", "x", "y")
    return Series(cols, [[s[c] for c in cols] for s in samples])


def berry_jump(times, gamma, period, window=0.1) -> dict:
    """Size of the geometric-phase jump across ``period / 2``.

    Samples with ``tau < (1/2 - window) T`` form the "before" set and those
    with ``tau > (1/2 + window) T`` the "after" set; the jump is the wrapped
    difference of their medians.
    """
    times = np.asarray(times)
    gamma = np.asarray(gamma)
    before = gamma[times < (0.5 - window) * period]
    after = gamma[times > (0.5 + window) * period]
    if not len(before) or not len(after):
        raise ValueError("orbit too short to bracket the half period")
    # circular medians: reference to the first sample of each set
    def cmed(g):
        return float(g[0] + np.median(np.angle(np.exp(1j * (g - g[0])))))
    jump = float(np.angle(np.exp(1j * (cmed(after) - cmed(before)))))
    return {"jump": jump, "before_max_abs": float(np.max(np.abs(before))),
            "after_median": cmed(after), "window": window}


def run_berry_trace(cfg: ScenarioConfig, strict=None) -> Bundle:
    st, samples, orbit = _orbit_run(cfg, cfg.initial, strict)
    ana, series = _berry_analysis(samples)
    b = Bundle("berry_trace", cfg)
    b.series["bloch"] = series
    b.series["orbit"] = _orbit_series(samples)
    b.snapshots["final"] = (st.field, st.tau)
    period = orbit["period"]
    summary = {k: v for k, v in ana.items() if k not in ("trace", "omega", "r_abs", "times")}
    summary.update(orbit)
    if period is not None:
        summary.update({f"jump_{k}": v for k, v in berry_jump(ana["times"], ana["trace"].gamma,
                                                                  period).items()})
    b.summary = summary
    b.runs["full"] = _run_meta(st)
    b.extras["berry"] = ana
    return b


def _roundtrip_job(cfg, initial, strict):
    st, samples, orbit = _orbit_run(cfg, initial, strict)
    return _run_meta(st), samples, orbit


def run_nonabelian_roundtrip(cfg: ScenarioConfig, strict=None) -> Bundle:
    """Two orbits mirrored in ``y0``; the cw run's P1 should track the ccw run's P2."""
    mirror = replace(cfg.initial, y0=-cfg.initial.y0, py0=-cfg.initial.py0)
    res = _map(_roundtrip_job, [(cfg, cfg.initial, strict), (cfg, mirror, strict)])
    b = Bundle("nonabelian_roundtrip", cfg)
    by_sense = {}
    for (meta, samples, orbit), spec in zip(res, (cfg.initial, mirror)):
        sense = orbit["sense"]
        if sense in by_sense:
            sense = f"{sense}_y0{spec.y0:+g}"
        by_sense[sense] = samples
        cols = ("tau", "P1", "P2", "norm", "energy", "flags")
        b.series[f"populations_{sense}"] = Series(cols, [[s[c] for c in cols] for s in samples])
        b.runs[sense] = {**meta, "y0": spec.y0, **orbit}
    if set(by_sense) == {"cw", "ccw"}:
        cw, ccw = by_sense["cw"], by_sense["ccw"]
        n = min(len(cw), len(ccw))
        d = [abs(cw[k]["P1"] - ccw[k]["P2"]) for k in range(n)]
        b.summary["interchange_residual"] = float(max(d))
        b.summary["interchange_samples"] = n
        b.summary["P_initial"] = [cw[0]["P1"], cw[0]["P2"], ccw[0]["P1"], ccw[0]["P2"]]
    else:
        b.summary["interchange_residual"] = None
        b.summary["note"] = "both runs turned the same way; no cw/ccw pair"
    return b


# ------------------------------------------------------------------ self-interference


def _ring_radius(cfg: ScenarioConfig, params: ModelParams) -> float:
    return params.v if params.v > 0 else math.hypot(cfg.initial.px0, cfg.initial.py0)


def _interference_job(cfg: ScenarioConfig, engine: str, g: float, strict, keep_fields: bool):
    params = _with_g(cfg.params, g)
    marks = tuple(cfg.snapshot_times) + (cfg.sample_every,)
    dt, nsteps = fit_dt(cfg.scheme.dt, cfg.duration, marks)
    st = _state(cfg, engine, params=params, dt=dt, strict=strict)
    radius = _ring_radius(cfg, params)
    cfg.grid.check_resolves(radius)
    nsample = _steps(cfg.sample_every, dt)
    snap_steps = {_steps(t, dt): t for t in cfg.snapshot_times}
    rows, widths, snaps = [], [], {}

    def sample():
        md = momentum_distribution(st.field)
        th, prof = azimuthal_profile(md, radius)
        w = azimuthal_width(th, prof)
        widths.append(w)
        rows.append([st.tau, node_contrast(md, radius), w.width, w.back_mass, st.field.norm(),
                     st.energy(), _flags(st)])
        return md

    sample()
    todo = sorted(set(range(nsample, nsteps + 1, nsample)) | set(snap_steps))
    for target in todo:
        st.advance(target - st.steps)
        if target % nsample == 0:
            sample()
        if target in snap_steps:
            md = momentum_distribution(st.field)
            snaps[snap_steps[target]] = {
                "tau": st.tau,
                "node_contrast": node_contrast(md, radius),
                "field": as_rep(st.field, Rep.MOMENTUM) if keep_fields else None,
            }
    st.finish()
    times = [r[0] for r in rows]
    try:
        tcol = collapse_time(times, widths)
    except ValueError:
        tcol = None
    meta = _run_meta(st, g=g, ring_radius=radius, tau_col_estimate=tcol)
    return meta, rows, snaps, st.field


INTERFERENCE_COLUMNS = ("tau", "node_contrast", "azimuthal_width", "back_mass", "norm", "energy",
                        "flags")


def run_self_interference(cfg: ScenarioConfig, strict=None) -> Bundle:
    """Momentum-ring interference for each engine and each interaction strength."""
    if cfg.duration is None:
        raise ConfigError("scenario.duration: self_interference needs a fixed duration")
    jobs = [(cfg, e, g, strict, True) for g in cfg.g_values for e in cfg.engines]
    res = _map(_interference_job, jobs)
    b = Bundle("self_interference", cfg)
    contrasts = {}
    for (meta, rows, snaps, _), (_, e, g, _, _) in zip(res, jobs):
        tag = _tag(e, g)
        b.series[f"ring_{tag}"] = Series(INTERFERENCE_COLUMNS, rows)
        for k, t in enumerate(sorted(snaps)):
            s = snaps[t]
            b.snapshots[f"momentum_{tag}_{k}"] = (s["field"], s["tau"])
        contrasts[tag] = {repr(t): snaps[t]["node_contrast"] for t in sorted(snaps)}
        b.runs[tag] = meta
    b.summary["node_contrast"] = contrasts
    b.summary["tau_col_estimate"] = {t: m["tau_col_estimate"] for t, m in b.runs.items()}
    b.summary["assumptions"] = ["nonzero g values borrowed from the phonon study: "
                                + ", ".join(repr(g) for g in cfg.g_sweep)]
    return b


# ------------------------------------------------------------------ time of flight


def content_radius(f: SpinorField, rel=1e-12) -> float:
    """Largest ``|p|`` where the momentum density exceeds ``rel`` times its peak."""
    md = momentum_distribution(f)
    PX, PY = np.meshgrid(md.px, md.py, indexing="ij")
    mask = md.density > rel * md.density.max()
    return float(np.hypot(PX, PY)[mask].max())


def expanded_grid(f: SpinorField, tof: float, margin: float = 8.0) -> GridSpec:
    """Same cell size, box large enough for ballistic flight over ``tof``."""
    g = f.grid
    pos = as_rep(f, Rep.POSITION)
    dens = pos.density()
    X, Y = g.XY
    reach = float(np.hypot(X, Y)[dens > 1e-12 * dens.max()].max())
    need = reach + tof * content_radius(f) + margin
    n = 1 << math.ceil(math.log2(max(2 * need / g.dx, g.nx)))
    return GridSpec(n, n, n * g.dx / 2, n * g.dy / 2)


def _tof_job(cfg: ScenarioConfig, engine: str, strict):
    dt, nsteps = fit_dt(cfg.scheme.dt, cfg.duration)
    st = _state(cfg, engine, dt=dt, strict=strict)
    st.advance(nsteps).finish()
    released = st.field
    big = expanded_grid(released, cfg.tof_duration)
    start = embed(released, big)
    dt_tof, n_tof = fit_dt(cfg.scheme.dt, cfg.tof_duration)
    free = replace(cfg.params, trap_on=False)
    tof = RunState(start, free, replace(cfg.scheme, dt=dt_tof), Engine.TOF, tau=st.tau,
                   monitor=cfg.monitor(strict))
    tof.advance(n_tof).finish()
    m0, m1 = momentum_distribution(start), momentum_distribution(tof.field)
    change = float(np.max(np.abs(m1.density - m0.density)) / m0.density.max())
    pos = as_rep(tof.field, Rep.POSITION)
    dens = pos.density()
    X, Y = big.XY
    rbar = float(np.sum(np.hypot(X, Y) * dens) / dens.sum())
    pos_dist = MomentumDistribution(big.x, big.y, dens, big.dx, big.dy)
    meta = _run_meta(st, release_tau=st.tau, tof=_run_meta(tof), expanded_grid=[big.nx, big.Lx],
                     momentum_change=change, mean_radius_after=rbar,
                     position_node_contrast=node_contrast(pos_dist, rbar))
    return meta, released, tof.field


def run_time_of_flight(cfg: ScenarioConfig, strict=None) -> Bundle:
    if cfg.duration is None or not cfg.tof_duration > 0:
        raise ConfigError("time_of_flight needs a fixed duration and a positive tof_duration")
    res = _map(_tof_job, [(cfg, e, strict) for e in cfg.engines])
    b = Bundle("time_of_flight", cfg)
    for (meta, released, landed), e in zip(res, cfg.engines):
        b.snapshots[f"released_{e}"] = (released, meta["release_tau"])
        b.snapshots[f"tof_{e}"] = (landed, meta["tof"]["final_tau"])
        b.runs[e] = meta
    b.summary["momentum_change"] = {e: b.runs[e]["momentum_change"] for e in cfg.engines}
    b.summary["position_node_contrast"] = {e: b.runs[e]["position_node_contrast"]
                                           for e in cfg.engines}
    return b


# ------------------------------------------------------------------ phonon swap


def swap_signal(times, nx, ny, window=(150.0, 250.0), level=0.5) -> dict:
    """Exchange of the phonon populations relative to their initial imbalance.

    ``s = (n_y - n_x) / (n_x(0) - n_y(0))`` is -1 at the start and +1 for a
    complete swap.  Reports the longest contiguous stretch with ``s > level``
    inside ``window`` and over the whole run.
    """
    times, nx, ny = map(np.asarray, (times, nx, ny))
    s = (ny - nx) / (nx[0] - ny[0])

    def longest(mask):
        best, start = 0.0, None
        for k, m in enumerate(mask):
            if m and start is None:
                start = k
            if (not m or k == len(mask) - 1) and start is not None:
                end = k if m else k - 1
                best = max(best, times[end] - times[start])
                start = None
        return float(best)

    inside = (times >= window[0]) & (times <= window[1])
    return {
        "max_s": float(s.max()),
        "max_s_window": float(s[inside].max()) if inside.any() else float("nan"),
        "longest_above_window": longest((s > level) & inside),
        "longest_above_total": longest(s > level),
        "first_crossing": float(times[np.argmax(s > 0)]) if (s > 0).any() else None,
        "level": level,
        "window": list(window),
    }


def _phonon_job(cfg: ScenarioConfig, engine: str, g: float, strict):
    params = _with_g(cfg.params, g)
    dt, nsteps = fit_dt(cfg.scheme.dt, cfg.duration, (cfg.sample_every,))
    st = _state(cfg, engine, params=params, dt=dt, strict=strict)
    nsample = _steps(cfg.sample_every, dt)
    rows = []

    def sample():
        nx, ny = phonon_numbers(st.field)
        rows.append([st.tau, nx, ny, st.field.norm(), st.energy(), _flags(st)])

    sample()
    while st.steps < nsteps:
        st.advance(min(nsample, nsteps - st.steps))
        sample()
    st.finish()
    return _run_meta(st, g=g), rows


PHONON_COLUMNS = ("tau", "n_x", "n_y", "norm", "energy", "flags")


def run_phonon_swap(cfg: ScenarioConfig, strict=None) -> Bundle:
    if cfg.duration is None:
        raise ConfigError("scenario.duration: phonon_swap needs a fixed duration")
    jobs = [(cfg, e, g, strict) for g in cfg.g_values for e in cfg.engines]
    res = _map(_phonon_job, jobs)
    b = Bundle("phonon_swap", cfg)
    for (meta, rows), (_, e, g, _) in zip(res, jobs):
        tag = _tag(e, g)
        ser = Series(PHONON_COLUMNS, rows)
        b.series[f"phonons_{tag}"] = ser
        meta["swap"] = swap_signal(ser.column("tau"), ser.column("n_x"), ser.column("n_y"))
        b.runs[tag] = meta
    b.summary["swap"] = {t: m["swap"] for t, m in b.runs.items()}
    return b


# ------------------------------------------------------------------ custom


def _custom_job(cfg: ScenarioConfig, engine: str, strict):
    horizon = cfg.duration if cfg.duration is not None else cfg.max_duration
    dt, nsteps = fit_dt(cfg.scheme.dt, horizon, (cfg.sample_every,) + tuple(cfg.snapshot_times))
    st = _state(cfg, engine, dt=dt, strict=strict)
    nsample = _steps(cfg.sample_every, dt)
    snap_steps = {_steps(t, dt) for t in cfg.snapshot_times}
    rows, snaps = [], []

    def sample():
        nx, ny = phonon_numbers(st.field)
        if st.field.ncomp == 2:
            s = bloch_sample(st.field)
            spin = [s.P1, s.P2, *s.r, s.purity]
        else:
            spin = [math.nan] * 6
        rows.append([st.tau, *spin, math.nan, math.nan, nx, ny, st.field.norm(), st.energy(),
                     _flags(st)])

    sample()
    for target in sorted(set(range(nsample, nsteps + 1, nsample)) | snap_steps | {nsteps}):
        st.advance(target - st.steps)
        if target % nsample == 0:
            sample()
        if target in snap_steps:
            snaps.append((st.field, st.tau))
    st.finish()
    return _run_meta(st), rows, snaps, st.field


def run_custom(cfg: ScenarioConfig, strict=None) -> Bundle:
    """Plain evolution with the standard series columns (no geometric phase)."""
    res = _map(_custom_job, [(cfg, e, strict) for e in cfg.engines])
    b = Bundle("custom", cfg)
    for (meta, rows, snaps, final), e in zip(res, cfg.engines):
        b.series[f"series_{e}"] = Series(SERIES_COLUMNS, rows)
        for k, (f, t) in enumerate(snaps):
            b.snapshots[f"{e}_{k}"] = (f, t)
        b.snapshots[f"{e}_final"] = (final, meta["final_tau"])
        b.runs[e] = meta
    return b


RUNNERS = {
    "berry_trace": run_berry_trace,
    "self_interference": run_self_interference,
    "time_of_flight": run_time_of_flight,
    "phonon_swap": run_phonon_swap,
    "nonabelian_roundtrip": run_nonabelian_roundtrip,
    "custom": run_custom,
}


def run_scenario(cfg: ScenarioConfig, strict=None) -> Bundle:
    return RUNNERS[cfg.scenario](cfg, strict)


# ------------------------------------------------------------------ bundle output


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def write_bundle(b: Bundle, out_dir) -> Path:
    """Write config echo, metadata, series and snapshots under ``out_dir``."""
    out = Path(out_dir)
    (out / "series").mkdir(parents=True, exist_ok=True)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(dump_config(b.config), encoding="utf-8")
    meta = {
        "scenario": b.scenario,
        "version": __version__,
        "conventions": CONVENTIONS,
        "summary": b.summary,
        "runs": b.runs,
        "series": {k: list(s.columns) for k, s in b.series.items()},
        "snapshots": {k: t for k, (f, t) in b.snapshots.items() if f is not None},
    }
    (out / "meta.json").write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
    for name, s in b.series.items():
        write_series(out / "series" / f"{name}.tsv", s.rows, s.columns)
    for name, (f, tau) in b.snapshots.items():
        if f is not None:
            write_snapshot(f, out / "snapshots" / f"{name}.somb", tau)
    return out


def default_output_root() -> Path:
    return Path(os.environ.get("SOMB_OUT", "out"))
