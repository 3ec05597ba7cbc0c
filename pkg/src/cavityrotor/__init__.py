"""Quantum rotor of an antiferromagnetic spin-1 condensate in a driven optical cavity.

The cavity pump tunes the rotor's confining potential; switching between a
tight and a wide trap squeezes the rotor.  Subpackages cover the model,
split-operator dynamics, drive protocols, noise, observables and an
exact-diagonalization cross-check.
"""
from .analysis import (G2Series, MomentReport, WignerMap, g2_series, g2_value, moments,
                       potential_variance, wigner)
from .config import RunConfig, default_config, load_config, parse_config
from .dynamics import (Observers, Trajectory, default_dt, ehrenfest_reference, evolve,
                       ground_state, propagate, stationary_states, step)
from .errors import (CalibrationError, ConfigError, ConvergenceError, LocalizationError,
                     ParameterError, PhotonFloorError, RotorError)
from .grid import AngularGrid, RotorState
from .model import (Calibration, DrivePoint, RotorConstants, RotorModel, SystemParams,
                    calibrate_frequencies, classify_regime, derive_constants, effective_potential,
                    far_detuned_scale, harmonic_frequency, solve_detuning)
from .oracle import FockBasis, build_hamiltonian, compare_with_rotor, exact_spectrum
from .protocol import (SqueezeProtocolSpec, diabaticity_report, gaussian_covariance_oracle,
                       make_squeeze_schedule)
from .runner import simulate
from .schedule import DriveSchedule, Segment
from .stochastic import (EnsembleStats, NoiseConfig, run_ensemble, sample_atom_number,
                         sample_intensity_path)

__all__ = [
    "AngularGrid", "Calibration", "CalibrationError", "ConfigError", "ConvergenceError",
    "DrivePoint", "DriveSchedule", "EnsembleStats", "FockBasis", "G2Series",
    "LocalizationError", "MomentReport", "NoiseConfig", "Observers", "ParameterError",
    "PhotonFloorError", "RotorConstants", "RotorError", "RotorModel", "RotorState",
    "RunConfig", "Segment", "SqueezeProtocolSpec", "SystemParams", "Trajectory", "WignerMap",
    "build_hamiltonian", "calibrate_frequencies", "classify_regime", "compare_with_rotor",
    "default_config", "default_dt", "derive_constants", "diabaticity_report",
    "effective_potential", "ehrenfest_reference", "evolve", "exact_spectrum",
    "far_detuned_scale", "g2_series", "g2_value", "gaussian_covariance_oracle",
    "ground_state", "harmonic_frequency", "load_config", "make_squeeze_schedule", "moments",
    "parse_config", "potential_variance", "propagate", "run_ensemble", "sample_atom_number",
    "sample_intensity_path", "simulate", "solve_detuning", "stationary_states", "step",
    "wigner",
]
