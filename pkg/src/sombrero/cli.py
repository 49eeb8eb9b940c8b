"""Command-line front end: ``sombrero {run,validate,oracle,info}``.

Failures print one JSON object on stderr, ``{"error": <kind>, "message": ...}``,
and exit with a nonzero code (2 config, 3 monitored failure, 4 file format,
5 oracle tolerance exceeded, 1 anything else).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .grid import GridError, fft_workers
from .io import SeriesFormatError, SnapshotFormatError
from .model import make_initial
from .propagators import (
    DENSE_MAX_POINTS, MonitorConfig, MonitoredFailure, RunState, dense_oracle_evolve, l2_distance,
)
from .scenarios import CONVENTIONS, fit_dt, run_scenario, write_bundle

EXIT_CODES = {ConfigError: 2, GridError: 2, MonitoredFailure: 3, SnapshotFormatError: 4,
              SeriesFormatError: 4}


class OracleMismatch(RuntimeError):
    pass


EXIT_CODES[OracleMismatch] = 5


def _output_dir(cfg, override) -> Path:
    if override:
        return Path(override)
    root = Path(os.environ.get("SOMB_OUT", cfg.output_dir))
    return root / cfg.scenario


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = _output_dir(cfg, args.out)
    bundle = run_scenario(cfg, strict=True if args.strict else None)
    write_bundle(bundle, out)
    flags = sorted({f for m in bundle.runs.values() for f in m.get("flags", [])})
    print(json.dumps({"status": "ok", "scenario": cfg.scenario, "output": str(out),
                      "flags": flags}))
    return 0


def _validate(cfg):
    radius = max(cfg.params.v, np.hypot(cfg.initial.px0, cfg.initial.py0))
    cfg.grid.check_resolves(radius)
    make_initial(cfg.initial, cfg.grid)
    if cfg.duration is not None and cfg.duration > 0:
        marks = tuple(cfg.snapshot_times)
        if cfg.scenario in ("self_interference", "phonon_swap", "custom"):
            marks += (cfg.sample_every,)
        fit_dt(cfg.scheme.dt, cfg.duration, marks)


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    _validate(cfg)
    print(json.dumps({"status": "ok", "scenario": cfg.scenario, "grid": [cfg.grid.nx, cfg.grid.ny],
                      "duration": cfg.duration}))
    return 0


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    tau = args.tau if args.tau is not None else (cfg.duration or 1.0)
    g = cfg.grid
    if max(g.nx, g.ny) > DENSE_MAX_POINTS:
        raise ConfigError(f"grid: oracle needs at most {DENSE_MAX_POINTS} points per axis")
    if cfg.params.interacting:
        raise ConfigError("model.g: oracle comparison needs g = 0")
    f0 = make_initial(cfg.initial, g)
    ref = dense_oracle_evolve(f0, cfg.params, tau)
    errs = []
    for dt_max in (cfg.scheme.dt, cfg.scheme.dt / 2):
        dt, n = fit_dt(dt_max, tau)
        st = RunState(f0, cfg.params, replace(cfg.scheme, dt=dt), "full",
                      monitor=MonitorConfig(every=10**9))
        errs.append(l2_distance(st.advance(n).field, ref))
    report = {"tau": tau, "dt": cfg.scheme.dt, "l2": errs[0], "l2_half_dt": errs[1],
              "ratio": errs[0] / errs[1] if errs[1] > 0 else float("inf"), "tol": args.tol}
    print(json.dumps(report))
    if not errs[0] < args.tol:
        raise OracleMismatch(f"L2 deviation {errs[0]:.3e} exceeds {args.tol:.1e}")
    return 0


def cmd_info(args) -> int:
    import numba
    import scipy
    info = {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "fft": "scipy.fft (pocketfft)",
        "SOMB_THREADS": fft_workers(),
        "SOMB_OUT": os.environ.get("SOMB_OUT"),
        "conventions": CONVENTIONS,
    }
    print(json.dumps(info, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sombrero", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sombrero {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log monitor warnings")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a scenario and write its result bundle")
    r.add_argument("config")
    r.add_argument("--out", help="bundle directory (default: $SOMB_OUT or [output] dir, plus scenario id)")
    r.add_argument("--strict", action="store_true", help="monitored failures abort the run")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="parse a config and check its invariants")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="compare the split-operator flow with the dense propagator")
    o.add_argument("config")
    o.add_argument("--tau", type=float, default=None, help="evolution time (default: duration)")
    o.add_argument("--tol", type=float, default=1e-4)
    o.set_defaults(func=cmd_oracle)

    i = sub.add_parser("info", help="print version and convention report")
    i.set_defaults(func=cmd_info)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as e:  # noqa: BLE001 - every failure becomes one machine-readable line
        code = next((c for t, c in EXIT_CODES.items() if isinstance(e, t)), 1)
        if isinstance(e, (FileNotFoundError, IsADirectoryError, PermissionError)):
            code = 4
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
