import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavityrotor.errors import CalibrationError, ParameterError
from cavityrotor.model import (DrivePoint, RegimeWarning, RotorModel, SystemParams,
                               bare_potential, calibrate_frequencies, cavity_amplitude,
                               classify_regime, derive_constants, effective_curvature,
                               effective_potential, effective_potential_gradient,
                               far_detuned_scale, harmonic_frequency, solve_detuning,
                               spin_coupling_from_density, steady_photon_number)
from cavityrotor.analysis import potential_variance
from cavityrotor.dynamics import ground_state
from cavityrotor.grid import AngularGrid


def unit_params(**kw):
    base = dict(N=100.0, c2=1.0, q=0.5, U0=0.2, kappa=1.0, hbar=1.0)
    base.update(kw)
    return SystemParams(**base)


# -- constants and bare potential -------------------------------------------

def test_chi1_for_ten_thousand_atoms():
    c = derive_constants(SystemParams(N=1e4, c2=3.0, q=7.0, U0=1.0, kappa=1.0))
    assert c.chi1 == 10001.5


def test_zero_field_constants():
    c = derive_constants(unit_params(q=0.0))
    assert c.chi2 == 0.0 and c.beta == 0.0


def test_direct_arithmetic_constants():
    c = derive_constants(SystemParams(N=8, c2=2.0, q=4.0, U0=1.0, kappa=1.0, hbar=1.0))
    assert c.chi2 == 2.0
    assert c.inertia == 4.0


def test_beta_times_energy_scale_is_q():
    p = SystemParams(N=1e4, c2=3.56e-29, q=5.8e-30, U0=1.2e4, kappa=6.3e6)
    c = derive_constants(p)
    assert c.beta * c.E0 == pytest.approx(p.q, rel=1e-14)
    assert c.E0 * c.t0 == pytest.approx(p.hbar, rel=1e-14)


def test_chi2_ratio_override():
    c = derive_constants(unit_params(chi2_ratio=1e-3))
    assert c.chi2 == pytest.approx(1e-3 * c.chi1)


@pytest.mark.parametrize("bad", [dict(N=0.5), dict(c2=-1.0), dict(q=-1.0), dict(kappa=0.0),
                                 dict(U0=-1.0), dict(chi2_ratio=-0.1)])
def test_parameter_validation(bad):
    with pytest.raises(ParameterError):
        unit_params(**bad)


@pytest.mark.parametrize("theta, chi1, chi2, want", [
    (0.0, 5.0, 3.0, 0.0),
    (math.pi / 2, 1.0, 1.0, 1.0),
    (math.pi / 4, 2.0, 3.0, 4.0),
])
def test_bare_potential_values(theta, chi1, chi2, want):
    c = derive_constants(unit_params())
    c = type(c)(chi1=chi1, chi2=chi2, inertia=1.0, beta=1.0, t0=1.0, E0=1.0)
    assert float(bare_potential(theta, c)) == pytest.approx(want, abs=1e-15)


def test_bare_potential_maximum():
    p = unit_params(chi2_ratio=0.3)
    c = derive_constants(p)
    th = np.linspace(0, math.pi, 200001)
    assert c.v_max == pytest.approx(bare_potential(th, c).max(), rel=1e-9)


# -- effective potential ------------------------------------------------------

def test_undriven_cavity_is_bare_potential_bitwise():
    p = unit_params()
    c = derive_constants(p)
    th = np.linspace(-3, 3, 257)
    assert np.array_equal(effective_potential(th, c, DrivePoint(0.0, -3.0), p),
                          bare_potential(th, c))


def test_zero_coupling_only_shifts_potential():
    p = unit_params(U0=0.0)
    c = derive_constants(p)
    d = DrivePoint(0.7, -0.4)
    th = np.linspace(-3, 3, 101)
    shift = effective_potential(th, c, d, p) - bare_potential(th, c)
    assert np.ptp(shift) < 1e-13
    dv = bare_potential(th + 1e-6, c) - bare_potential(th - 1e-6, c)
    de = effective_potential(th + 1e-6, c, d, p) - effective_potential(th - 1e-6, c, d, p)
    assert np.allclose(de, dv, rtol=0, atol=1e-12)


def _mp_veff(theta, p, c, d):
    th = mpmath.mpf(theta)
    v = mpmath.mpf(c.chi1) * mpmath.sin(th) ** 2 + mpmath.mpf(c.chi2) * mpmath.sin(2 * th) ** 2
    amp = 2 * mpmath.mpf(p.hbar) * mpmath.mpf(d.eta) ** 2 / (mpmath.mpf(p.q) * mpmath.mpf(p.kappa))
    arg = (2 * mpmath.mpf(d.delta) + 2 * mpmath.mpf(p.U0) * v) / mpmath.mpf(p.kappa)
    return v + amp * mpmath.atan(arg)


@pytest.mark.parametrize("which", ["tight", "wide"])
def test_effective_potential_against_extended_precision(reference_calibration, which):
    cal = reference_calibration
    p = cal.params
    c = derive_constants(p)
    d = cal.drive_tight if which == "tight" else cal.drive_wide
    grid = AngularGrid(1024)
    got = effective_potential(grid.theta, c, d, p)
    with mpmath.workdps(40):
        want = np.array([float(_mp_veff(t, p, c, d)) for t in grid.theta])
    assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(theta=st.floats(-10, 10), eta=st.floats(0, 3), delta=st.floats(-50, 50))
def test_potentials_are_even_and_pi_periodic(theta, eta, delta):
    p = unit_params()
    c = derive_constants(p)
    d = DrivePoint(eta, delta)
    for f in (lambda x: bare_potential(x, c), lambda x: effective_potential(x, c, d, p)):
        assert abs(f(theta) - f(theta + math.pi)) < 1e-12 * max(1.0, abs(f(theta)))
        assert abs(f(theta) - f(-theta)) < 1e-12 * max(1.0, abs(f(theta)))


@settings(max_examples=60, deadline=None)
@given(eta=st.floats(0, 5), delta=st.floats(-100, 100))
def test_cavity_term_bounded_by_arctan_range(eta, delta):
    p = unit_params()
    c = derive_constants(p)
    d = DrivePoint(eta, delta)
    th = np.linspace(-math.pi / 2, math.pi / 2, 64)
    extra = effective_potential(th, c, d, p) - bare_potential(th, c)
    bound = 2 * p.hbar * eta**2 / (p.q * p.kappa) * math.pi / 2
    assert np.all(np.abs(extra) <= bound * (1 + 1e-12) + 1e-15)


def test_gradient_and_curvature_match_finite_differences():
    p = unit_params(chi2_ratio=0.01)
    c = derive_constants(p)
    d = DrivePoint(1.3, -2.0)
    th = np.linspace(-1.2, 1.2, 13)
    h = 1e-6
    fd = (effective_potential(th + h, c, d, p) - effective_potential(th - h, c, d, p)) / (2 * h)
    assert np.allclose(effective_potential_gradient(th, c, d, p), fd, rtol=1e-7, atol=1e-7)
    with mpmath.workdps(30):
        curv = mpmath.diff(lambda x: _mp_veff(x, p, c, d), 0, 2)
    assert effective_curvature(c, d, p) == pytest.approx(float(curv), rel=1e-12)


def test_harmonic_frequency_scales_with_sqrt_of_potential():
    p = unit_params(chi2_ratio=0.01)
    c = derive_constants(p)
    d = DrivePoint(0.0, 0.0)
    w = harmonic_frequency(d, c, p)
    assert w == pytest.approx(math.sqrt(p.q * (2 * c.chi1 + 8 * c.chi2) / c.inertia), rel=1e-14)
    # scaling q scales V_eff's weight in the Hamiltonian
    p4 = unit_params(q=4 * p.q, chi2_ratio=0.01)
    assert harmonic_frequency(d, derive_constants(p4), p4) == pytest.approx(2 * w, rel=1e-12)


# -- far-detuned limit and regimes ---------------------------------------------

def test_far_detuned_scale_examples():
    p = unit_params(U0=2.0, q=1.0, kappa=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        assert far_detuned_scale(DrivePoint(0.0, 0.0), p) == 1.0
        assert far_detuned_scale(DrivePoint(0.5, 0.0), p) == pytest.approx(3.0, rel=1e-15)


def test_far_detuned_scale_warns_near_resonance():
    p = unit_params()
    with pytest.warns(RegimeWarning):
        far_detuned_scale(DrivePoint(1.0, 0.0), p)


def _far_params():
    return SystemParams(N=1e4, c2=1.0, q=1.0, U0=1e-3, kappa=1.0, hbar=1.0, chi2_ratio=1e-3)


def test_far_detuned_limit_reduces_to_scaled_bare_potential():
    p = _far_params()
    c = derive_constants(p)
    d = DrivePoint(2e3, -50 * p.U0 * p.N)
    th = np.linspace(-math.pi / 2, math.pi / 2, 2001)
    s = far_detuned_scale(d, p)
    v0 = effective_potential(0.0, c, d, p)
    dev = np.abs(effective_potential(th, c, d, p) - v0 - s * bare_potential(th, c))
    assert dev.max() / (s * c.chi1) < 1e-3


def test_far_detuned_gradient_error_shrinks_with_detuning():
    p = _far_params()
    c = derive_constants(p)
    th = np.array([0.2, 0.6, 1.1])
    errs = []
    for ratio in (10, 30, 100):
        d = DrivePoint(2e3, -ratio * p.U0 * p.N)
        g = effective_potential_gradient(th, c, d, p)
        ref = far_detuned_scale(d, p) * np.sin(2 * th) * c.chi1 + 2 * c.chi2 * np.sin(4 * th) \
            * far_detuned_scale(d, p)
        errs.append(np.max(np.abs(g - ref) / np.abs(ref)))
    assert errs[0] > errs[1] > errs[2]


def test_regime_classification():
    p = SystemParams(N=1e4, c2=1.0, q=1.0, U0=2e-3, kappa=1.0, hbar=1.0)
    c = derive_constants(p)
    assert p.depth_ratio == pytest.approx(20.0)
    mid = classify_regime(DrivePoint(1.0, -p.U0 * c.v_max / 2), c, p)
    assert mid.classification == "distorting" and mid.resonance_overlap
    assert classify_regime(DrivePoint(1.0, 100 * p.U0 * p.N), c, p).classification == "scaling"
    assert classify_regime(DrivePoint(1.0, 0.0), c, p).classification == "distorting"


def test_zero_detuning_tightens_most():
    p = SystemParams(N=1e4, c2=1.0, q=1.0, U0=2e-3, kappa=1.0, hbar=1.0)
    c = derive_constants(p)
    eta = 3.0
    w0 = harmonic_frequency(DrivePoint(eta, 0.0), c, p)
    for delta in (-5.0, -0.5, 0.5, 5.0):
        assert harmonic_frequency(DrivePoint(eta, delta), c, p) < w0


# -- photon number ------------------------------------------------------------

def test_photon_number_examples():
    p = unit_params()
    assert steady_photon_number(3.0, DrivePoint(0.0, 1.0), p) == 0.0
    eta = 0.37
    assert steady_photon_number(3.0, DrivePoint(eta, -p.U0 * 3.0), p) == pytest.approx(
        4 * eta**2 / p.kappa**2, rel=1e-14)


def _ground_state_photons(cal):
    model = RotorModel.from_params(cal.params)
    grid = AngularGrid(4096)
    w = model.omega_dimless(cal.drive_tight)
    gs = ground_state(grid, model.potential_energy(grid.theta, cal.drive_tight), tol=1e-10 * w)
    mean_v, _ = potential_variance(gs, model.constants)
    return steady_photon_number(mean_v, cal.drive_tight, cal.params)


def test_reference_scale_photon_number_is_small(reference_calibration):
    # expected to stay below a thousand photons
    n = _ground_state_photons(reference_calibration)
    assert n < 1000, f"ground-state photon number {n:.0f} at reference scale"


def test_reference_scale_photon_number_lower_bound(reference_calibration):
    # the cavity only stiffens the trap, so omega_bare <= omega_wide and
    # 4 eta^2 / kappa^2 >= hbar N (omega_tight^2 - omega_wide^2) / (c2 U0 V''(0))
    cal = reference_calibration
    p = cal.params
    c = derive_constants(p)
    bound = (p.hbar * p.N * (cal.omega_tight**2 - cal.omega_wide**2)
             / (p.c2 * p.U0 * c.curvature_bare))
    n = _ground_state_photons(cal)
    assert bound <= n <= 1.01 * bound


# -- calibration ----------------------------------------------------------------

def test_spin_coupling_from_sodium_density():
    a_bohr = 5.29177210903e-11
    mass = 22.98976928 * 1.66053906660e-27
    c2 = spin_coupling_from_density(5e20, 5 * a_bohr, mass)
    hbar = 1.054571817e-34
    assert c2 / (2 * math.pi * hbar) == pytest.approx(243.636, rel=1e-5)


def test_calibration_hits_both_targets(reference_calibration):
    cal = reference_calibration
    assert cal.omega_tight == pytest.approx(2 * math.pi * 43e3, rel=1e-10)
    assert cal.omega_wide == pytest.approx(2 * math.pi * 7e3, rel=1e-9)
    assert cal.drive_tight.delta == 0.0
    assert cal.drive_tight.eta == cal.drive_wide.eta
    c = derive_constants(cal.params)
    assert cal.drive_wide.delta == pytest.approx(-cal.params.U0 * c.v_max, rel=1e-14)


def test_calibration_rejects_unreachable_pair():
    p = SystemParams(N=1e4, c2=1e-30, q=1e-30, U0=0.5 * 6.28e6 / 1e4, kappa=6.28e6)
    with pytest.raises(CalibrationError):
        calibrate_frequencies(p, 2 * math.pi * 43e3, 2 * math.pi * 0.5e3)
    with pytest.raises(CalibrationError):
        calibrate_frequencies(p, 1.0, 2.0)


def test_solve_detuning_round_trip(desk_calibration):
    cal = desk_calibration
    p = cal.params
    c = derive_constants(p)
    for target in (cal.omega_wide, 0.5 * (cal.omega_wide + cal.omega_tight)):
        for branch in (-1, 1):
            d = solve_detuning(target, cal.drive_tight.eta, c, p, branch=branch)
            assert np.sign(d.delta) == branch
            assert harmonic_frequency(d, c, p) == pytest.approx(target, rel=1e-10)
    assert solve_detuning(cal.omega_tight, cal.drive_tight.eta, c, p).delta == 0.0
    with pytest.raises(CalibrationError) as info:
        solve_detuning(2 * cal.omega_tight, cal.drive_tight.eta, c, p)
    lo, hi = info.value.attainable
    assert lo < hi == pytest.approx(cal.omega_tight)


def test_cavity_amplitude_needs_field():
    p = unit_params(q=0.0)
    with pytest.raises(ZeroDivisionError):
        cavity_amplitude(DrivePoint(1.0, 0.0), p)


def test_rotor_model_cavity_term_consistent():
    p = unit_params()
    m = RotorModel.from_params(p)
    d = DrivePoint(0.8, -1.5)
    th = np.linspace(-1, 1, 33)
    v = bare_potential(th, m.constants)
    total = m.beta * v + 0.7 * m.cavity_term(v, d)
    assert np.allclose(total, m.potential_energy(th, d, cavity_factor=0.7), rtol=1e-14, atol=1e-14)
