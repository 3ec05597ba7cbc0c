"""Run configuration: a single JSON document with unit-suffixed keys.

Suffix conventions: ``_hz`` is an ordinary frequency (multiply by 2 pi for
rad/s); for energies it means ``E / h``.  ``_us`` is microseconds and
``_rad`` radians.  Unknown keys are rejected.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import jsonschema
from scipy import constants as sc

from .errors import ConfigError
from .model import DrivePoint, SystemParams
from .stochastic import NoiseConfig

TWO_PI = 2.0 * math.pi

SNAPSHOT_EVENTS_DOC = ("initial", "final", "switch_wide_<c>", "hold_wide_<c>",
                       "switch_tight_<c>", "hold_tight_<c>", "prep", "post_hold")


def _num(minimum=None, exclusive=False, nullable=False):
    s = {"type": "number"}
    if minimum is not None:
        s["exclusiveMinimum" if exclusive else "minimum"] = minimum
    if nullable:
        s = {"anyOf": [s, {"type": "null"}]}
    return s


_DRIVE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["eta_hz", "delta_hz"],
    "properties": {"eta_hz": _num(0), "delta_hz": _num()},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "cavityrotor run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["system"],
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_dir": {"type": ["string", "null"]},
        "system": {
            "type": "object",
            "additionalProperties": False,
            "required": ["atom_number", "spin_coupling_hz"],
            "properties": {
                "atom_number": _num(1),
                "spin_coupling_hz": _num(0, exclusive=True),
                "zeeman_q_hz": _num(0, nullable=True),
                "coupling_depth": _num(0),
                "kappa_hz": _num(0, exclusive=True),
                "chi2_ratio": _num(0, nullable=True),
            },
        },
        "drives": {
            "anyOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["tight", "wide"],
                    "properties": {"tight": _DRIVE, "wide": _DRIVE},
                },
            ]
        },
        "calibration": {
            "anyOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["omega_tight_hz", "omega_wide_hz"],
                    "properties": {
                        "omega_tight_hz": _num(0, exclusive=True),
                        "omega_wide_hz": _num(0, exclusive=True),
                    },
                },
            ]
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_points": {"type": "integer", "minimum": 4},
                "period_rad": _num(0, exclusive=True),
                "center_rad": _num(),
            },
        },
        "protocol": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_cycles": {"type": "integer", "minimum": 0},
                "switch_time_us": _num(0),
                "prep_time_us": _num(0),
                "post_hold_us": _num(0),
                "dt_us": _num(0, exclusive=True, nullable=True),
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "photon_noise_enabled": {"type": "boolean"},
                "atom_number_sigma_rel": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
                "n_trajectories": {"type": "integer", "minimum": 1},
                "atom_number_distribution": {"enum": ["gaussian", "poisson"]},
                "photon_refresh": {"enum": ["segment", "step"]},
            },
        },
        "observers": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "moments_stride": {"type": "integer", "minimum": 0},
                "g2": {"type": "boolean"},
                "photon_floor": _num(0, exclusive=True),
                "wigner_events": {"type": "array", "items": {"type": "string"}},
                "wigner_times_us": {"type": "array", "items": _num(0)},
                "wigner_max_rows": {"type": "integer", "minimum": 2},
                "save_final_state": {"type": "boolean"},
            },
        },
        "validation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "suites": {"type": "array", "items": {"enum": [
                    "oracle", "conservation", "convergence", "ground_state", "squeezing"]}},
                "oracle_atom_numbers": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "convergence_steps": {"type": "integer", "minimum": 8},
                "convergence_ratio_range": {
                    "type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "grid_tolerance": _num(0, exclusive=True),
                "convergence_abs_tol": _num(0, exclusive=True),
            },
        },
    },
}


@dataclass
class SystemConfig:
    atom_number: float
    spin_coupling_hz: float
    zeeman_q_hz: Optional[float] = None
    coupling_depth: float = 20.0
    kappa_hz: float = 1.0e6
    chi2_ratio: Optional[float] = None

    def params(self, atom_number: Optional[float] = None, q_joule: Optional[float] = None) -> SystemParams:
        """Physical parameters in SI units.

        ``U0`` is fixed by the nominal atom number; a different
        ``atom_number`` changes the collective depth, not the single-atom
        coupling.
        """
        kappa = TWO_PI * self.kappa_hz
        u0 = self.coupling_depth * kappa / self.atom_number
        q = q_joule if q_joule is not None else (
            sc.h * self.zeeman_q_hz if self.zeeman_q_hz is not None else sc.h * self.spin_coupling_hz)
        return SystemParams(
            N=self.atom_number if atom_number is None else atom_number,
            c2=sc.h * self.spin_coupling_hz,
            q=q,
            U0=u0,
            kappa=kappa,
            chi2_ratio=self.chi2_ratio,
        )


@dataclass
class DriveConfig:
    eta_hz: float
    delta_hz: float

    def point(self) -> DrivePoint:
        return DrivePoint(TWO_PI * self.eta_hz, TWO_PI * self.delta_hz)

    @classmethod
    def from_point(cls, p: DrivePoint) -> "DriveConfig":
        return cls(p.eta / TWO_PI, p.delta / TWO_PI)


@dataclass
class DrivesConfig:
    tight: DriveConfig
    wide: DriveConfig


@dataclass
class CalibrationConfig:
    omega_tight_hz: float
    omega_wide_hz: float


@dataclass
class GridConfig:
    n_points: int = 1024
    period_rad: float = math.pi
    center_rad: float = 0.0


@dataclass
class ProtocolConfig:
    n_cycles: int = 3
    switch_time_us: float = 0.0
    prep_time_us: float = 0.0
    post_hold_us: float = 0.0
    dt_us: Optional[float] = None


@dataclass
class NoiseSection:
    photon_noise_enabled: bool = False
    atom_number_sigma_rel: float = 0.0
    n_trajectories: int = 1
    atom_number_distribution: str = "gaussian"
    photon_refresh: str = "segment"


@dataclass
class ObserverConfig:
    moments_stride: int = 0
    g2: bool = False
    photon_floor: float = 1e-6
    wigner_events: List[str] = field(default_factory=list)
    wigner_times_us: List[float] = field(default_factory=list)
    wigner_max_rows: int = 256
    save_final_state: bool = True


@dataclass
class ValidationConfig:
    suites: List[str] = field(default_factory=lambda: [
        "oracle", "conservation", "convergence", "ground_state", "squeezing"])
    oracle_atom_numbers: List[int] = field(default_factory=lambda: [10, 20, 40])
    convergence_steps: int = 256
    convergence_ratio_range: List[float] = field(default_factory=lambda: [3.5, 4.5])
    grid_tolerance: float = 1e-8
    convergence_abs_tol: float = 1e-6


@dataclass
class RunConfig:
    system: SystemConfig
    name: str = "run"
    seed: int = 0
    output_dir: Optional[str] = None
    drives: Optional[DrivesConfig] = None
    calibration: Optional[CalibrationConfig] = None
    grid: GridConfig = field(default_factory=GridConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    noise: NoiseSection = field(default_factory=NoiseSection)
    observers: ObserverConfig = field(default_factory=ObserverConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)

    def noise_config(self) -> NoiseConfig:
        n = self.noise
        return NoiseConfig(
            photon_noise_enabled=n.photon_noise_enabled,
            atom_number_sigma_rel=n.atom_number_sigma_rel,
            seed=self.seed,
            n_trajectories=n.n_trajectories,
            atom_number_distribution=n.atom_number_distribution,
            photon_refresh=n.photon_refresh,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def replace(self, **changes) -> "RunConfig":
        """Deep copy with top-level sections replaced."""
        out = copy.deepcopy(self)
        for k, v in changes.items():
            setattr(out, k, v)
        return out


_SECTIONS = {
    "system": SystemConfig,
    "drives": DrivesConfig,
    "calibration": CalibrationConfig,
    "grid": GridConfig,
    "protocol": ProtocolConfig,
    "noise": NoiseSection,
    "observers": ObserverConfig,
    "validation": ValidationConfig,
}


def _build(cls, data):
    if data is None:
        return None
    if cls is DrivesConfig:
        return DrivesConfig(tight=DriveConfig(**data["tight"]), wide=DriveConfig(**data["wide"]))
    names = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in data.items() if k in names})


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded JSON document and build a :class:`RunConfig`."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from None
    kwargs = {}
    for key, value in data.items():
        kwargs[key] = _build(_SECTIONS[key], value) if key in _SECTIONS else value
    cfg = RunConfig(**kwargs)
    n = cfg.grid.n_points
    if n & (n - 1):
        raise ConfigError(f"grid.n_points must be a power of two, got {n}")
    if cfg.drives is None and cfg.calibration is None:
        raise ConfigError("need explicit drives or calibration targets")
    if cfg.calibration is not None:
        c = cfg.calibration
        if not c.omega_tight_hz > c.omega_wide_hz:
            raise ConfigError("calibration needs omega_tight_hz > omega_wide_hz")
    return cfg


DEFAULT_CONFIG = {
    "name": "harmonic-desk",
    "seed": 20240611,
    "output_dir": None,
    "system": {
        "atom_number": 10000,
        "spin_coupling_hz": 53750.0,
        "zeeman_q_hz": None,
        "coupling_depth": 20.0,
        "kappa_hz": 1.0e6,
        "chi2_ratio": 0.001,
    },
    "calibration": {"omega_tight_hz": 43000.0, "omega_wide_hz": 43000.0 / 1.4},
    "grid": {"n_points": 1024, "period_rad": math.pi, "center_rad": 0.0},
    "protocol": {"n_cycles": 3, "switch_time_us": 0.0, "prep_time_us": 0.0,
                 "post_hold_us": 0.0, "dt_us": None},
    "noise": {"photon_noise_enabled": False, "atom_number_sigma_rel": 0.0, "n_trajectories": 1},
    "observers": {"moments_stride": 20, "g2": True,
                  "wigner_events": ["initial", "switch_wide_1", "final"]},
}


def default_config() -> dict:
    """Desk-scale harmonic-regime configuration (dimensionless tight frequency 8000)."""
    return copy.deepcopy(DEFAULT_CONFIG)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return parse_config(data)


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(cfg.to_json() + "\n")
