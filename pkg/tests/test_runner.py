import math

import numpy as np
import pytest

from cavityrotor.errors import ConfigError, ConvergenceError
from cavityrotor.grid import AngularGrid, RotorState
from cavityrotor.runner import SERIES_COLUMNS, check_resolution, resolve_system, simulate
from cavityrotor.validation import energy_drift, run_validation

from conftest import small_config


def test_desk_calibration_hits_targets(desk_calibration):
    assert desk_calibration.omega_tight == pytest.approx(2 * math.pi * 43e3, rel=1e-9)
    assert desk_calibration.omega_wide == pytest.approx(2 * math.pi * 43e3 / 1.4, rel=1e-9)


def test_explicit_drives_need_zeeman_shift(desk_config):
    from cavityrotor.config import DriveConfig, DrivesConfig
    cal = resolve_system(desk_config)
    cfg = desk_config.replace(drives=DrivesConfig(DriveConfig.from_point(cal.drive_tight),
                                                  DriveConfig.from_point(cal.drive_wide)))
    with pytest.raises(ConfigError):
        resolve_system(cfg)


def test_simulate_small_run():
    cfg = small_config()
    res = simulate(cfg)
    series = res.series()
    assert list(series) == list(SERIES_COLUMNS)
    n = len(series["time"])
    assert all(len(v) == n for v in series.values())
    assert np.all(series["g2"] >= 1.0)
    assert set(res.states()) == {"initial", "switch_wide_1", "final"}
    assert res.states()["initial"] is res.initial or np.array_equal(
        res.states()["initial"].amplitudes, res.initial.amplitudes)
    assert series["time"][-1] == pytest.approx(res.schedule.total_duration)
    # one cycle squeezes by (omega_wide / omega_tight)^2
    assert res.final_moments()["min_variance_ratio"] == pytest.approx(1 / 1.4**2, rel=0.02)


def test_unknown_snapshot_event():
    cfg = small_config()
    cfg.observers.wigner_events = ["never"]
    with pytest.raises(ConfigError, match="unknown snapshot event"):
        simulate(cfg)


def test_snapshot_beyond_schedule():
    cfg = small_config()
    cfg.observers.wigner_times_us = [1e6]
    with pytest.raises(ConfigError):
        simulate(cfg)


def test_coarse_grid_is_refused():
    with pytest.raises(ConvergenceError):
        simulate(small_config(n_points=64))


def test_check_resolution():
    g = AngularGrid(256)
    check_resolution(RotorState.gaussian(g, 0.1))
    spiky = np.zeros(256, complex)
    spiky[0] = 1.0
    with pytest.raises(ConvergenceError, match="momentum"):
        check_resolution(RotorState(spiky, g).normalized())
    window = AngularGrid(256, period=1.0)
    with pytest.raises(ConvergenceError, match="edge"):
        check_resolution(RotorState(np.ones(256), window).normalized())


def test_energy_drift_of_harmonic_packet():
    g = AngularGrid(512)
    omega = 400.0
    v = 0.5 * omega**2 * g.theta**2
    psi = RotorState.gaussian(g, 1 / math.sqrt(2 * omega), center=0.05)
    runs = [energy_drift(psi, v, dt, int(4 / dt)) for dt in (1e-4, 5e-5)]
    for norm, drift, excursion in runs:
        assert norm < 1e-10
        # the energy error oscillates without a secular trend
        assert drift < 0.02 * excursion
    # and its amplitude is second order in dt
    assert runs[0][2] / runs[1][2] == pytest.approx(4.0, rel=0.01)


def test_default_validation_passes(desk_config):
    results = run_validation(desk_config)
    failed = [r for r in results if not r.passed]
    assert failed == []
    assert {r.suite for r in results} == set(desk_config.validation.suites)


def test_validation_detects_a_too_large_step(desk_config):
    cfg = desk_config.replace()
    cfg.protocol.dt_us = 0.05
    cfg.validation.suites = ["convergence"]
    results = run_validation(cfg)
    assert not all(r.passed for r in results)
