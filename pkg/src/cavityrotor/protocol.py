"""Drive programs built from adiabatic ramps and diabatic switches.

The squeezing protocol alternates between a tight and a wide trap, holding
each for a quarter of its oscillation period so that angle and angular
momentum swap roles before the next switch.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .dynamics import stationary_states
from .errors import ParameterError
from .grid import RotorState
from .model import DrivePoint, harmonic_frequency  # noqa: F401  (re-exported)
from .schedule import DriveSchedule, Segment


class TimingWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SqueezeProtocolSpec:
    """Squeezing protocol settings.

    Frequencies in rad/s, times in seconds.  ``switch_time = 0`` gives
    instantaneous switches.
    """

    n_cycles: int
    omega_tight: float
    omega_wide: float
    switch_time: float
    drive_tight: DrivePoint
    drive_wide: DrivePoint
    prep_time: float = 0.0

    def __post_init__(self):
        if self.n_cycles < 0:
            raise ParameterError("n_cycles must be non-negative")
        if not self.omega_tight > self.omega_wide > 0:
            raise ParameterError("need omega_tight > omega_wide > 0")
        if self.switch_time < 0 or self.prep_time < 0:
            raise ParameterError("switch_time and prep_time must be non-negative")
        if self.switch_time * self.omega_tight > 0.5:
            warnings.warn(
                f"switch_time {self.switch_time:.3g} s is not short compared to "
                f"1/omega_tight = {1 / self.omega_tight:.3g} s", TimingWarning, stacklevel=2)

    @property
    def hold_wide(self) -> float:
        return math.pi / (2.0 * self.omega_wide)

    @property
    def hold_tight(self) -> float:
        return math.pi / (2.0 * self.omega_tight)

    @property
    def cycle_duration(self) -> float:
        return self.hold_wide + self.hold_tight + 2.0 * self.switch_time


def ramp(duration: float, start: DrivePoint, end: DrivePoint, shape: str = "smoothstep",
         label: str = "ramp") -> DriveSchedule:
    """Single adiabatic (slow) or diabatic (fast) change of the drive."""
    return DriveSchedule((Segment(duration, shape, start, end, label),))


def concatenate(*schedules: DriveSchedule) -> DriveSchedule:
    return DriveSchedule(tuple(s for sch in schedules for s in sch.segments))


def make_squeeze_schedule(spec: SqueezeProtocolSpec) -> DriveSchedule:
    segs: List[Segment] = []
    if spec.prep_time > 0:
        segs.append(Segment.hold(spec.prep_time, spec.drive_tight, "prep"))
    for c in range(spec.n_cycles):
        segs += [
            Segment(spec.switch_time, "smoothstep", spec.drive_tight, spec.drive_wide,
                    f"switch_wide_{c + 1}"),
            Segment.hold(spec.hold_wide, spec.drive_wide, f"hold_wide_{c + 1}"),
            Segment(spec.switch_time, "smoothstep", spec.drive_wide, spec.drive_tight,
                    f"switch_tight_{c + 1}"),
            Segment.hold(spec.hold_tight, spec.drive_tight, f"hold_tight_{c + 1}"),
        ]
    return DriveSchedule(tuple(segs))


def event_times(schedule: DriveSchedule) -> dict:
    """Times (s) at the end of every labelled segment, plus ``initial``/``final``."""
    out = {"initial": 0.0}
    t = 0.0
    for seg in schedule.segments:
        t += seg.duration
        if seg.label:
            out[seg.label] = t
    out["final"] = t
    return out


@dataclass(frozen=True)
class DiabaticityReport:
    weights: np.ndarray
    energies: np.ndarray
    residual: float


def diabaticity_report(state_before: RotorState, potential_after, k: int,
                       beta: float = 1.0) -> DiabaticityReport:
    """Populations of the ``k`` lowest eigenstates of the new potential."""
    if k < 2:
        raise ParameterError("k must be at least 2")
    pairs = stationary_states(state_before.grid, potential_after, k, beta)
    psi = state_before.normalized()
    w = np.array([abs(vec.overlap(psi)) ** 2 for _, vec in pairs])
    return DiabaticityReport(
        weights=w,
        energies=np.array([e for e, _ in pairs]),
        residual=float(1.0 - w.sum()),
    )


def _quarter_turn(omega: float) -> np.ndarray:
    # free evolution for a quarter period: theta -> l/omega, l -> -omega theta
    return np.array([[0.0, 1.0 / omega], [-omega, 0.0]])


def harmonic_propagator(omega: float, t: float) -> np.ndarray:
    c, s = math.cos(omega * t), math.sin(omega * t)
    return np.array([[c, s / omega], [-omega * s, c]])


def gaussian_covariance_oracle(spec: SqueezeProtocolSpec, t0: float = 1.0,
                               initial: np.ndarray = None) -> List[np.ndarray]:
    """Covariance of ``(theta, l)`` after each cycle of an ideal protocol.

    Switches are instantaneous and both traps harmonic.  ``t0`` converts the
    physical frequencies to the dimensionless units of the covariance
    (``hbar = I = 1``); the default starting point is the tight-trap ground
    state.
    """
    w1 = spec.omega_tight * t0
    w2 = spec.omega_wide * t0
    cov = np.diag([0.5 / w1, 0.5 * w1]) if initial is None else np.array(initial, dtype=float)
    cycle = _quarter_turn(w1) @ _quarter_turn(w2)
    out = []
    for _ in range(spec.n_cycles):
        cov = cycle @ cov @ cycle.T
        out.append(cov.copy())
    return out


def minor_variance_ratio(cov: np.ndarray, omega: float) -> Tuple[float, float]:
    """Minor- and major-axis variances relative to the zero-point value of ``omega``."""
    scaled = np.array([[omega * cov[0, 0], cov[0, 1]], [cov[0, 1], cov[1, 1] / omega]])
    vals = np.linalg.eigvalsh(scaled)
    return float(vals[0] / 0.5), float(vals[1] / 0.5)
