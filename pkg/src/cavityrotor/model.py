"""Physical parameters and the bare and cavity-modified rotor potentials.

Public interfaces take SI quantities: energies in joules, rates and
frequencies in rad/s.  The rotor itself is simulated in units where the
energy scale is ``E0 = hbar**2 / I`` and the time scale ``t0 = I / hbar``;
in these units the Hamiltonian reads ``l**2 / 2 + beta * V_eff(theta)``
with ``l = L / hbar`` and ``beta = q I / hbar**2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import constants as sc
from scipy.optimize import brentq

from .errors import CalibrationError, ParameterError

HBAR = sc.hbar


class RegimeWarning(RuntimeWarning):
    """Raised when a formula is used outside the regime it assumes."""


@dataclass(frozen=True)
class SystemParams:
    """Microscopic parameters of the condensate and cavity.

    Parameters
    ----------
    N : float
        Atom number.
    c2 : float
        Spin-dependent collisional coupling (J), positive for
        antiferromagnetic condensates.
    q : float
        Quadratic Zeeman shift (J).
    U0 : float
        Single-atom dispersive shift of the cavity mode (rad/s).
    kappa : float
        Cavity linewidth (rad/s).
    hbar : float
        Reduced Planck constant (J s).
    chi2_ratio : float, optional
        If given, ``chi2 = chi2_ratio * chi1`` replaces the microscopic
        expression ``q N / (8 c2)``.  Use 0.0 to drop the term.
    """

    N: float
    c2: float
    q: float
    U0: float
    kappa: float
    hbar: float = HBAR
    chi2_ratio: Optional[float] = None

    def __post_init__(self):
        if not self.N >= 1:
            raise ParameterError(f"atom number must be >= 1, got {self.N}")
        if not self.c2 > 0:
            raise ParameterError(f"c2 must be positive (antiferromagnetic), got {self.c2}")
        if not self.q >= 0:
            raise ParameterError(f"q must be non-negative, got {self.q}")
        if not self.kappa > 0:
            raise ParameterError(f"kappa must be positive, got {self.kappa}")
        if not self.U0 >= 0:
            raise ParameterError(f"U0 must be non-negative, got {self.U0}")
        if not self.hbar > 0:
            raise ParameterError("hbar must be positive")
        if self.chi2_ratio is not None and self.chi2_ratio < 0:
            raise ParameterError("chi2_ratio must be non-negative")

    @property
    def depth_ratio(self) -> float:
        """Cavity tuning range ``U0 N / kappa``."""
        return self.U0 * self.N / self.kappa

    def with_atom_number(self, N: float) -> "SystemParams":
        return replace(self, N=N)


@dataclass(frozen=True)
class RotorConstants:
    chi1: float
    chi2: float
    inertia: float
    beta: float
    t0: float
    E0: float

    @property
    def curvature_bare(self) -> float:
        """Second derivative of the bare potential at theta = 0."""
        return 2.0 * self.chi1 + 8.0 * self.chi2

    @property
    def v_max(self) -> float:
        """Maximum of the bare potential over a period."""
        return bare_potential_max(self.chi1, self.chi2)


@dataclass(frozen=True)
class DrivePoint:
    """Pump rate ``eta`` and cavity-pump detuning ``delta``, both in rad/s."""

    eta: float
    delta: float

    def __post_init__(self):
        if not self.eta >= 0:
            raise ParameterError(f"pump rate must be non-negative, got {self.eta}")


@dataclass(frozen=True)
class RegimeReport:
    depth_ratio: float
    resonance_overlap: bool
    classification: str


def derive_constants(params: SystemParams) -> RotorConstants:
    N, c2, q, hbar = params.N, params.c2, params.q, params.hbar
    chi1 = N + 1.5
    if params.chi2_ratio is None:
        chi2 = q * N / (8.0 * c2)
    else:
        chi2 = params.chi2_ratio * chi1
    inertia = N * hbar**2 / c2
    return RotorConstants(
        chi1=chi1,
        chi2=chi2,
        inertia=inertia,
        beta=q * N / c2,
        t0=inertia / hbar,
        E0=hbar**2 / inertia,
    )


def bare_potential_max(chi1: float, chi2: float) -> float:
    # with s = sin^2(theta): V = chi1 s + 4 chi2 s (1 - s), s in [0, 1]
    if chi2 <= 0 or chi1 >= 4.0 * chi2:
        return max(chi1, 0.0)
    s = (chi1 + 4.0 * chi2) / (8.0 * chi2)
    return chi1 * s + 4.0 * chi2 * s * (1.0 - s)


def bare_potential(theta, constants: RotorConstants):
    """``chi1 sin^2(theta) + chi2 sin^2(2 theta)``."""
    theta = np.asarray(theta, dtype=float)
    return constants.chi1 * np.sin(theta) ** 2 + constants.chi2 * np.sin(2.0 * theta) ** 2


def bare_potential_gradient(theta, constants: RotorConstants):
    theta = np.asarray(theta, dtype=float)
    return constants.chi1 * np.sin(2.0 * theta) + 2.0 * constants.chi2 * np.sin(4.0 * theta)


def cavity_amplitude(drive: DrivePoint, params: SystemParams) -> float:
    """Prefactor ``2 hbar eta^2 / (q kappa)`` of the arctan term."""
    if params.q == 0:
        raise ZeroDivisionError("effective potential is undefined for q = 0; use bare_potential")
    return 2.0 * params.hbar * drive.eta**2 / (params.q * params.kappa)


def effective_potential(theta, constants: RotorConstants, drive: DrivePoint,
                        params: SystemParams, cavity_factor: float = 1.0):
    """Bare potential plus the adiabatically eliminated cavity contribution.

    ``cavity_factor`` multiplies the cavity term and carries intensity noise.
    """
    v = bare_potential(theta, constants)
    amp = cavity_factor * cavity_amplitude(drive, params)
    arg = (2.0 * drive.delta + 2.0 * params.U0 * v) / params.kappa
    return v + amp * np.arctan(arg)


def effective_potential_gradient(theta, constants: RotorConstants, drive: DrivePoint,
                                 params: SystemParams, cavity_factor: float = 1.0):
    v = bare_potential(theta, constants)
    dv = bare_potential_gradient(theta, constants)
    amp = cavity_factor * cavity_amplitude(drive, params)
    x = (2.0 * drive.delta + 2.0 * params.U0 * v) / params.kappa
    return dv * (1.0 + amp * (2.0 * params.U0 / params.kappa) / (1.0 + x**2))


def effective_curvature(constants: RotorConstants, drive: DrivePoint,
                        params: SystemParams, cavity_factor: float = 1.0) -> float:
    """Second derivative of the effective potential at theta = 0."""
    amp = cavity_factor * cavity_amplitude(drive, params)
    x0 = 2.0 * drive.delta / params.kappa
    return constants.curvature_bare * (1.0 + amp * (2.0 * params.U0 / params.kappa) / (1.0 + x0**2))


def harmonic_frequency(drive: DrivePoint, constants: RotorConstants,
                       params: SystemParams, cavity_factor: float = 1.0) -> float:
    """Small-oscillation frequency (rad/s) of the rotor about theta = 0."""
    curv = effective_curvature(constants, drive, params, cavity_factor)
    if not curv > 0:
        raise ParameterError(f"effective potential has non-positive curvature {curv} at theta=0")
    return math.sqrt(params.q * curv / constants.inertia)


def far_detuned_scale(drive: DrivePoint, params: SystemParams) -> float:
    """Enhancement factor of the bare potential for a far-detuned pump.

    This is the first-order expansion of the arctan term around ``2 delta / kappa``.
    """
    if abs(drive.delta) < 10.0 * params.U0 * params.N:
        warnings.warn(
            f"|delta| = {abs(drive.delta):.3g} is not far detuned compared to U0 N = "
            f"{params.U0 * params.N:.3g}; the linear scale factor is unreliable",
            RegimeWarning,
            stacklevel=2,
        )
    return 1.0 + params.hbar * params.U0 * drive.eta**2 / (
        params.q * (params.kappa**2 / 4.0 + drive.delta**2))


def classify_regime(drive: DrivePoint, constants: RotorConstants, params: SystemParams,
                    scaling_factor: float = 10.0) -> RegimeReport:
    """Decide whether the cavity merely scales or genuinely reshapes the potential.

    ``scaling`` requires ``|delta| >= scaling_factor * U0 * V_max``;
    ``distorting`` requires ``U0 N / kappa > 1`` and an arctan argument range
    that crosses zero.
    """
    depth = params.depth_ratio
    span = params.U0 * constants.v_max
    lo = 2.0 * drive.delta / params.kappa
    hi = (2.0 * drive.delta + 2.0 * span) / params.kappa
    overlap = lo <= 0.0 <= hi
    if abs(drive.delta) >= scaling_factor * span:
        label = "scaling"
    elif depth > 1.0 and overlap:
        label = "distorting"
    else:
        label = "intermediate"
    return RegimeReport(depth_ratio=depth, resonance_overlap=overlap, classification=label)


def steady_photon_number(mean_V: float, drive: DrivePoint, params: SystemParams) -> float:
    """Steady-state intracavity photon number ``|alpha_s|^2``."""
    shift = drive.delta + params.U0 * mean_V
    return drive.eta**2 / (params.kappa**2 / 4.0 + shift**2)


def spin_coupling_from_density(density, delta_a, mass):
    """Collisional spin coupling ``4 pi hbar^2 delta_a n / (3 m)`` in joules.

    ``density`` in m^-3, ``delta_a = a2 - a0`` in m, ``mass`` in kg.
    """
    return 4.0 * math.pi * HBAR**2 * delta_a * density / (3.0 * mass)


# -- calibration ----------------------------------------------------------

@dataclass(frozen=True)
class Calibration:
    params: SystemParams
    drive_tight: DrivePoint
    drive_wide: DrivePoint
    omega_tight: float
    omega_wide: float


def attainable_range(eta: float, constants: RotorConstants, params: SystemParams):
    """Lowest and highest harmonic frequency reachable by tuning the detuning."""
    lo = math.sqrt(params.q * constants.curvature_bare / constants.inertia)
    hi = harmonic_frequency(DrivePoint(eta, 0.0), constants, params)
    return lo, hi


def solve_detuning(target_omega: float, eta: float, constants: RotorConstants,
                   params: SystemParams, branch: int = -1, rtol: float = 1e-12) -> DrivePoint:
    """Find the detuning on the given branch that yields ``target_omega``.

    The small-oscillation frequency is even in the detuning and falls
    monotonically from its maximum at zero detuning, so each branch holds at
    most one root.  Targets outside the attainable range raise
    :class:`CalibrationError`.
    """
    lo, hi = attainable_range(eta, constants, params)
    if target_omega > hi * (1.0 + rtol) or target_omega <= lo:
        raise CalibrationError(
            f"target {target_omega:.6g} rad/s outside attainable range "
            f"({lo:.6g}, {hi:.6g}] rad/s for eta = {eta:.6g} rad/s",
            attainable=(lo, hi),
        )
    if target_omega >= hi * (1.0 - rtol):
        return DrivePoint(eta, 0.0)

    def mismatch(delta):
        return harmonic_frequency(DrivePoint(eta, delta), constants, params) - target_omega

    far = params.kappa
    while mismatch(branch * far) > 0:
        far *= 4.0
        if far > 1e12 * params.kappa:
            raise CalibrationError("could not bracket the detuning root", attainable=(lo, hi))
    if branch < 0:
        root = brentq(mismatch, -far, 0.0, xtol=1e-15 * params.kappa, rtol=rtol, maxiter=500)
    else:
        root = brentq(mismatch, 0.0, far, xtol=1e-15 * params.kappa, rtol=rtol, maxiter=500)
    return DrivePoint(eta, root)


def _eta_for_tight(omega_tight, constants, params):
    # tight trap sits on resonance: curvature = V''(0) (1 + 4 hbar eta^2 U0 / (q kappa^2))
    omega_bare_sq = params.q * constants.curvature_bare / constants.inertia
    gain = omega_tight**2 / omega_bare_sq - 1.0
    if gain < 0:
        return None
    return math.sqrt(gain * params.q * params.kappa**2 / (4.0 * params.hbar * params.U0))


def calibrate_frequencies(params: SystemParams, omega_tight: float, omega_wide: float,
                    q_bracket=(1e-12, 1e6)) -> Calibration:
    """Back-solve the Zeeman shift and pump rate from two trap frequencies.

    The tight trap uses zero detuning (maximal confinement) and the wide trap
    the detuning ``-U0 V_max`` that flattens the potential, both at the same
    pump rate.  ``params.q`` is ignored; ``q_bracket`` bounds the search in
    units of ``c2``.
    """
    if not omega_tight > omega_wide > 0:
        raise CalibrationError("need omega_tight > omega_wide > 0")
    if params.U0 <= 0:
        raise CalibrationError("calibration needs a non-zero cavity coupling")

    def solve_for(q):
        p = replace(params, q=q)
        c = derive_constants(p)
        eta = _eta_for_tight(omega_tight, c, p)
        return p, c, eta

    def mismatch(log_q):
        p, c, eta = solve_for(math.exp(log_q) * params.c2)
        if eta is None:
            return -omega_wide  # bare trap already too stiff
        wide = DrivePoint(eta, -p.U0 * c.v_max)
        return omega_wide - harmonic_frequency(wide, c, p)

    a, b = (math.log(x) for x in q_bracket)
    fa, fb = mismatch(a), mismatch(b)
    if fa * fb > 0:
        raise CalibrationError(
            "frequency pair unreachable with wide detuning -U0 V_max: the ratio "
            f"omega_tight/omega_wide = {omega_tight / omega_wide:.4g} needs a deeper cavity "
            f"(U0 N / kappa = {params.depth_ratio:.4g})")
    log_q = brentq(mismatch, a, b, xtol=1e-15, rtol=1e-15, maxiter=500)
    p, c, eta = solve_for(math.exp(log_q) * params.c2)
    tight = DrivePoint(eta, 0.0)
    wide = DrivePoint(eta, -p.U0 * c.v_max)
    return Calibration(
        params=p,
        drive_tight=tight,
        drive_wide=wide,
        omega_tight=harmonic_frequency(tight, c, p),
        omega_wide=harmonic_frequency(wide, c, p),
    )


@dataclass(frozen=True)
class RotorModel:
    """Parameters bundled with their derived constants.

    Convenience for the time-dependent code: evaluates the dimensionless
    potential energy ``beta * V_eff`` on a grid of angles.
    """

    params: SystemParams
    constants: RotorConstants

    @classmethod
    def from_params(cls, params: SystemParams) -> "RotorModel":
        return cls(params, derive_constants(params))

    @property
    def beta(self) -> float:
        return self.constants.beta

    @property
    def t0(self) -> float:
        return self.constants.t0

    def potential_energy(self, theta, drive: DrivePoint, cavity_factor: float = 1.0):
        """``beta * V_eff(theta)`` in units of ``E0``."""
        return self.beta * effective_potential(theta, self.constants, drive, self.params, cavity_factor)

    def cavity_term(self, v_bare, drive: DrivePoint):
        """``beta`` times the cavity part of ``V_eff`` for precomputed bare values."""
        p = self.params
        arg = (2.0 * drive.delta + 2.0 * p.U0 * np.asarray(v_bare)) / p.kappa
        return self.beta * cavity_amplitude(drive, p) * np.arctan(arg)

    def omega(self, drive: DrivePoint) -> float:
        """Harmonic frequency in rad/s."""
        return harmonic_frequency(drive, self.constants, self.params)

    def omega_dimless(self, drive: DrivePoint) -> float:
        return self.omega(drive) * self.t0

    def mean_photons(self, mean_V: float, drive: DrivePoint) -> float:
        return steady_photon_number(mean_V, drive, self.params)
