"""Command-line front end.

Exit codes: 0 success, 2 configuration error (including unreachable
calibration targets), 3 numerical failure, 4 validation failure,
5 warning promoted to an error by ``--strict``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
import traceback
import warnings
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import scipy

from .analysis import wigner
from .config import DriveConfig, DrivesConfig, RunConfig, default_config, load_config, parse_config
from .errors import (CalibrationError, ConfigError, ConvergenceError, LocalizationError,
                     ParameterError, PhotonFloorError)
from .grid import AngularGrid, RotorState
from .model import RotorModel, classify_regime
from .runner import SERIES_COLUMNS, resolve_system, simulate
from .stochastic import run_ensemble
from .validation import run_validation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4
EXIT_WARNING = 5


class Writer:
    """Single funnel for output files; records a content hash per file."""

    def __init__(self, out_dir: Path):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: Dict[str, str] = {}

    def _register(self, name: str):
        data = (self.out / name).read_bytes()
        self.files[name] = hashlib.sha256(data).hexdigest()

    def text(self, name: str, content: str):
        (self.out / name).write_text(content)
        self._register(name)

    def json(self, name: str, obj):
        self.text(name, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def csv(self, name: str, columns: Dict[str, np.ndarray]):
        header = ",".join(columns)
        data = np.column_stack([np.asarray(v, dtype=float) for v in columns.values()])
        self.text(name, header + "\n" + _rows(data))

    def matrix(self, name: str, values: np.ndarray):
        self.text(name, _rows(np.atleast_2d(values)))

    def npz(self, name: str, **arrays):
        with open(self.out / name, "wb") as fh:
            np.savez(fh, **arrays)
        self._register(name)


def _rows(data: np.ndarray) -> str:
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in data)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        pkg = "unknown"
    return {"cavityrotor": pkg, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


# -- state files -----------------------------------------------------------

def save_states(writer: Writer, name: str, states: Dict[str, RotorState], omega_ref: float):
    grid = next(iter(states.values())).grid
    arrays = {
        "labels": np.array(list(states)),
        "n_points": np.array(grid.n_points),
        "period": np.array(grid.period),
        "center": np.array(grid.center),
        "omega_ref": np.array(omega_ref),
    }
    for i, (label, st) in enumerate(states.items()):
        arrays[f"psi_{i}"] = st.amplitudes
        arrays[f"time_{i}"] = np.array(st.time)
    writer.npz(name, **arrays)


def load_states(path):
    with np.load(path) as z:
        grid = AngularGrid(int(z["n_points"]), float(z["period"]), float(z["center"]))
        out = {}
        for i, label in enumerate(z["labels"]):
            out[str(label)] = RotorState(z[f"psi_{i}"], grid, float(z[f"time_{i}"]))
        return out, float(z["omega_ref"])


def write_wigner(writer: Writer, stem: str, state_or_states, omega_ref: float, max_rows: int):
    w = wigner(state_or_states, max_rows=max_rows)
    writer.matrix(f"{stem}.csv", w.values)
    writer.matrix(f"{stem}_theta.csv", w.theta[:, None])
    writer.matrix(f"{stem}_l.csv", w.l[:, None])
    writer.json(f"{stem}_axes.json", {
        "rows": "theta (rad)", "columns": "l = L / hbar",
        "zero_point_width_theta": math.sqrt(0.5 / omega_ref),
        "zero_point_width_l": math.sqrt(0.5 * omega_ref),
        "integral": w.integral(), "purity": w.purity(),
    })


# -- commands ----------------------------------------------------------------

def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config(default_config())
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=int(args.seed))
    return cfg


def _out_dir(args, cfg: RunConfig, fallback: str) -> Path:
    return Path(args.out or cfg.output_dir or fallback)


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    if cfg.calibration is None:
        raise ConfigError("calibrate needs calibration targets")
    cal = resolve_system(cfg, recalibrate=True)
    model = RotorModel.from_params(cal.params)
    targets = (2 * math.pi * cfg.calibration.omega_tight_hz,
               2 * math.pi * cfg.calibration.omega_wide_hz)
    derived = cfg.replace(drives=DrivesConfig(DriveConfig.from_point(cal.drive_tight),
                                              DriveConfig.from_point(cal.drive_wide)))
    derived.system.zeeman_q_hz = cal.params.q / (2 * math.pi * cal.params.hbar)
    report = {
        "zeeman_q_hz": derived.system.zeeman_q_hz,
        "drives": {"tight": vars(derived.drives.tight), "wide": vars(derived.drives.wide)},
        "achieved_hz": {"tight": cal.omega_tight / (2 * math.pi),
                        "wide": cal.omega_wide / (2 * math.pi)},
        "relative_error": {"tight": cal.omega_tight / targets[0] - 1,
                           "wide": cal.omega_wide / targets[1] - 1},
        "omega_tight_dimensionless": model.omega_dimless(cal.drive_tight),
        "t0_s": model.t0,
        "mean_photons": {"tight": model.mean_photons(0.0, cal.drive_tight),
                         "wide": model.mean_photons(0.0, cal.drive_wide)},
        "regime": {"tight": classify_regime(cal.drive_tight, model.constants, cal.params).classification,
                   "wide": classify_regime(cal.drive_wide, model.constants, cal.params).classification},
    }
    writer = Writer(_out_dir(args, cfg, "calibration_out"))
    writer.text("calibrated_config.json", derived.to_json() + "\n")
    writer.json("calibration_report.json", report)
    writer.json("manifest.json", _manifest(cfg, writer, {"calibrate": 0.0}))
    print(json.dumps(report, indent=2, default=_jsonable))
    return EXIT_OK


def _manifest(cfg: RunConfig, writer: Writer, timings: dict, extra: Optional[dict] = None) -> dict:
    man = {
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "versions": _versions(),
        "timings_s": timings,
        "created": datetime.now(timezone.utc).isoformat(),
        "files": dict(sorted(writer.files.items())),
    }
    if extra:
        man.update(extra)
    return man


def cmd_run(args) -> int:
    cfg = _load(args)
    writer = Writer(_out_dir(args, cfg, "run_out"))
    writer.text("config.json", cfg.to_json() + "\n")
    obs = cfg.observers
    noise = cfg.noise_config()
    timings = {}
    t = time.perf_counter()
    extra = {}
    if noise.n_trajectories == 1 and noise.is_silent:
        res = simulate(cfg)
        timings["simulate"] = time.perf_counter() - t
        if obs.moments_stride:
            writer.csv("moments.csv", res.series())
        states = res.states()
        for label in list(obs.wigner_events) + [f"t_{x:g}us" for x in obs.wigner_times_us]:
            write_wigner(writer, f"wigner_{label}", states[label], res.omega_ref, obs.wigner_max_rows)
        if obs.save_final_state or not obs.moments_stride:
            save_states(writer, "states.npz", states, res.omega_ref)
        extra["final_moments"] = res.final_moments()
        extra["n_steps"] = res.trajectory.n_steps
        extra["dt_s"] = res.dt
    else:
        stats = run_ensemble(cfg, noise, workers=args.workers, keep_results=True)
        timings["ensemble"] = time.perf_counter() - t
        extra["failures"] = stats.failures
        extra["atom_numbers"] = stats.atom_numbers.tolist()
        extra["n_ok"] = stats.n_ok
        extra["final_moments"] = stats.final_moments
        if stats.n_ok and obs.moments_stride:
            cols = [c for c in SERIES_COLUMNS if c in stats.mean]
            writer.csv("ensemble_mean.csv", {c: stats.mean[c] if c != "time" else stats.times
                                             for c in cols})
            writer.csv("ensemble_stderr.csv", {c: stats.stderr[c] if c != "time" else stats.times
                                               for c in cols})
            writer.csv("moments.csv", stats.results[0].series())
        if stats.n_ok:
            first = stats.results[0]
            labels = list(obs.wigner_events) + [f"t_{x:g}us" for x in obs.wigner_times_us]
            for label in labels:
                write_wigner(writer, f"wigner_{label}", first.states()[label], first.omega_ref,
                             obs.wigner_max_rows)
                write_wigner(writer, f"wigner_{label}_ensemble",
                             [r.states()[label] for r in stats.results], first.omega_ref,
                             obs.wigner_max_rows)
            if obs.save_final_state or not obs.moments_stride:
                save_states(writer, "states.npz", first.states(), first.omega_ref)
        if stats.failures and stats.n_ok == 0:
            writer.json("manifest.json", _manifest(cfg, writer, timings, extra))
            raise ConvergenceError(f"all {len(stats.failures)} trajectories failed: "
                                   f"{stats.failures[0][1]}")
    writer.json("manifest.json", _manifest(cfg, writer, timings, extra))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args)
    t = time.perf_counter()
    results = run_validation(cfg)
    ok = all(r.passed for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} [{r.suite}] {r.name}: measured {r.measured:.4g} "
              f"(tolerance {r.tolerance:.4g}) {r.detail}".rstrip())
    if args.out or cfg.output_dir:
        writer = Writer(_out_dir(args, cfg, "validate_out"))
        writer.json("validation_report.json", {"passed": ok,
                                               "checks": [r.to_dict() for r in results]})
        writer.json("manifest.json", _manifest(cfg, writer, {"validate": time.perf_counter() - t}))
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_wigner(args) -> int:
    if not args.states:
        raise ConfigError("wigner needs --states <states.npz>")
    cfg = _load(args)
    states, omega_ref = load_states(args.states)
    writer = Writer(Path(args.out or "wigner_out"))
    for label, st in states.items():
        write_wigner(writer, f"wigner_{label}", st, omega_ref, cfg.observers.wigner_max_rows)
    writer.json("manifest.json", _manifest(cfg, writer, {}, {"source": str(args.states)}))
    return EXIT_OK


COMMANDS = {"calibrate": cmd_calibrate, "run": cmd_run, "validate": cmd_validate,
            "wigner": cmd_wigner}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavityrotor",
                                description="Cavity-controlled quantum rotor simulations.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON run configuration (default: built-in desk config)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int, help="master seed (overrides the config)")
        s.add_argument("--workers", type=int, default=1, help="parallel trajectory workers")
        s.add_argument("--strict", action="store_true", help="treat warnings as errors")
        if name == "wigner":
            s.add_argument("--states", help="states.npz written by `run`")
    return p


def _error(code: int, exc: BaseException, out: Optional[Path]) -> int:
    report = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(report, indent=2) + "\n")
        except OSError:
            pass
    print(json.dumps(report), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        return _error(EXIT_CONFIG, ConfigError("--seed must be an unsigned 64-bit integer"), None)
    if args.workers < 1:
        return _error(EXIT_CONFIG, ConfigError("--workers must be at least 1"), None)
    out = Path(args.out) if args.out else None
    try:
        with warnings.catch_warnings():
            if args.strict:
                warnings.simplefilter("error")
            return COMMANDS[args.command](args)
    except (ConfigError, CalibrationError, ParameterError) as exc:
        return _error(EXIT_CONFIG, exc, out)
    except (ConvergenceError, LocalizationError, PhotonFloorError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        return _error(EXIT_NUMERICAL, exc, out)
    except Warning as exc:
        return _error(EXIT_WARNING, exc, out)
    except Exception as exc:  # pragma: no cover
        traceback.print_exc()
        return _error(EXIT_NUMERICAL, exc, out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
