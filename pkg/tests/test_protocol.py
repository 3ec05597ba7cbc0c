import math
import warnings

import numpy as np
import pytest

from cavityrotor.dynamics import evolve, stationary_states
from cavityrotor.errors import ParameterError
from cavityrotor.grid import AngularGrid, RotorState
from cavityrotor.model import DrivePoint, RotorModel, SystemParams
from cavityrotor.protocol import (SqueezeProtocolSpec, TimingWarning, diabaticity_report,
                                  event_times, gaussian_covariance_oracle, harmonic_propagator,
                                  make_squeeze_schedule, minor_variance_ratio, ramp)

W1, W2 = 2 * math.pi * 43e3, 2 * math.pi * 7e3
TIGHT, WIDE = DrivePoint(1.0, 0.0), DrivePoint(1.0, -5.0)


def spec(n_cycles=5, switch=1e-6, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TimingWarning)
        return SqueezeProtocolSpec(n_cycles, W1, W2, switch, TIGHT, WIDE, **kw)


# -- timing -----------------------------------------------------------------

def test_quarter_period_holds():
    s = spec()
    assert s.hold_tight == pytest.approx(1 / (4 * 43e3))
    assert s.hold_wide == pytest.approx(1 / (4 * 7e3))


def test_five_cycles_last_about_two_hundred_microseconds():
    sched = make_squeeze_schedule(spec())
    assert 150e-6 <= sched.total_duration <= 250e-6
    assert sched.total_duration == pytest.approx(5 * (1 / (4 * 43e3) + 1 / (4 * 7e3) + 2e-6))


def test_schedule_structure_and_events():
    sched = make_squeeze_schedule(spec(n_cycles=2, prep_time=3e-6))
    labels = [s.label for s in sched.segments]
    assert labels == ["prep", "switch_wide_1", "hold_wide_1", "switch_tight_1", "hold_tight_1",
                      "switch_wide_2", "hold_wide_2", "switch_tight_2", "hold_tight_2"]
    ev = event_times(sched)
    assert ev["initial"] == 0.0
    assert ev["prep"] == pytest.approx(3e-6)
    assert ev["final"] == pytest.approx(sched.total_duration)
    assert ev["hold_wide_1"] == pytest.approx(3e-6 + 1e-6 + 1 / (4 * 7e3))
    assert sched.drive_at(0.0) == TIGHT
    assert sched.drive_at(ev["switch_wide_1"] + 1e-9) == WIDE


def test_zero_cycles_gives_empty_schedule():
    assert len(make_squeeze_schedule(spec(n_cycles=0))) == 0


def test_slow_switch_warns():
    with pytest.warns(TimingWarning):
        SqueezeProtocolSpec(1, W1, W2, 10e-6, TIGHT, WIDE)


@pytest.mark.parametrize("bad", [dict(n_cycles=-1), dict(omega_wide=2 * W1),
                                 dict(switch_time=-1.0)])
def test_spec_validation(bad):
    args = dict(n_cycles=1, omega_tight=W1, omega_wide=W2, switch_time=0.0,
                drive_tight=TIGHT, drive_wide=WIDE)
    args.update(bad)
    with pytest.raises(ParameterError):
        SqueezeProtocolSpec(**args)


def test_ramp_shapes_are_monotone_and_hit_endpoints():
    for shape in ("linear", "smoothstep"):
        r = ramp(1.0, TIGHT, WIDE, shape)
        ds = [r.drive_at(t).delta for t in np.linspace(0, 1, 21)]
        assert ds[0] == 0.0 and ds[-1] == -5.0
        assert np.all(np.diff(ds) <= 0)


# -- Gaussian oracle ----------------------------------------------------------

def test_oracle_squeezes_by_frequency_ratio_squared_per_cycle():
    covs = gaussian_covariance_oracle(spec(n_cycles=4, switch=0.0), t0=1e-6)
    w1 = W1 * 1e-6
    for k, cov in enumerate(covs, start=1):
        minor, major = minor_variance_ratio(cov, w1)
        assert minor == pytest.approx((W2 / W1) ** (2 * k), rel=1e-10)
        assert minor * major == pytest.approx(1.0, rel=1e-10)
        assert np.linalg.det(cov) == pytest.approx(0.25, rel=1e-10)


def test_harmonic_propagator_is_symplectic_and_periodic():
    m = harmonic_propagator(3.0, 0.7)
    assert np.linalg.det(m) == pytest.approx(1.0)
    full = harmonic_propagator(3.0, 2 * math.pi / 3)
    assert np.allclose(full, np.eye(2), atol=1e-12)


# -- diabatic switches --------------------------------------------------------

def squeezed_vacuum_weights(ratio, n_max):
    """Populations of the wide-trap levels 0..n_max after a sudden switch.

    The tight ground state is a squeezed vacuum of the wide trap with
    ``r = ln(omega_tight / omega_wide) / 2``.
    """
    r = 0.5 * math.log(ratio)
    out = np.zeros(n_max + 1)
    for n in range(0, n_max // 2 + 1):
        out[2 * n] = (math.factorial(2 * n) / (4**n * math.factorial(n) ** 2)
                      * math.tanh(r) ** (2 * n) / math.cosh(r))
    return out


def test_sudden_switch_populations_match_squeezed_vacuum():
    w1, w2 = 400.0, 100.0
    g = AngularGrid(1024, period=4.0)
    tight = 0.5 * w1**2 * g.theta**2
    wide = 0.5 * w2**2 * g.theta**2
    (_, gs), = stationary_states(g, tight, 1)
    rep = diabaticity_report(gs, wide, 16)
    want = squeezed_vacuum_weights(w1 / w2, 15)
    assert np.allclose(rep.weights, want, atol=1e-9)
    assert rep.residual == pytest.approx(1.0 - want.sum(), abs=1e-9)


def test_adiabatic_ramp_keeps_ground_state():
    model = RotorModel.from_params(SystemParams(N=1.0, c2=1.0, q=2e4, U0=0.5, kappa=4.0,
                                                hbar=1.0, chi2_ratio=0.0))
    g = AngularGrid(512)
    a, b = DrivePoint(1000.0, 0.0), DrivePoint(1000.0, -20.0)
    w_a, w_b = model.omega_dimless(a), model.omega_dimless(b)
    assert w_a > 1.3 * w_b
    (_, gs), = stationary_states(g, model.potential_energy(g.theta, a), 1)
    out = []
    for duration in (0.0, 20 * 2 * math.pi / w_b):
        traj = evolve(gs, ramp(duration, a, b), model, 0.02 / w_a)
        out.append(diabaticity_report(traj.final, model.potential_energy(g.theta, b), 4))
    sudden, slow = out
    assert sudden.weights[0] < 0.99
    assert slow.weights[0] > 1 - 1e-4


def test_diabaticity_needs_two_levels():
    g = AngularGrid(64)
    with pytest.raises(ParameterError):
        diabaticity_report(RotorState.gaussian(g, 0.2), np.zeros(64), 1)
