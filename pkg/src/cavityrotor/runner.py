"""Single-trajectory driver: configuration in, observed trajectory out."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .analysis import G2Series, g2_series, moments
from .config import RunConfig
from .dynamics import Observers, Trajectory, count_nodes, default_dt, evolve, ground_state
from .errors import ConfigError, ConvergenceError
from .grid import AngularGrid, RotorState
from .model import Calibration, RotorModel, calibrate_frequencies, derive_constants, solve_detuning
from .protocol import SqueezeProtocolSpec, event_times, make_squeeze_schedule
from .schedule import DriveSchedule, Segment
from .stochastic import sample_photon_noise

SERIES_COLUMNS = ("time", "mean_theta", "var_theta", "mean_l", "var_l", "covar",
                  "squeeze_angle", "n_photons", "g2", "min_variance_ratio", "mean_V", "var_V")


def resolve_system(cfg: RunConfig, recalibrate: bool = False) -> Calibration:
    """Nominal parameters and the tight/wide drives of a configuration.

    Explicit drives are used as given unless ``recalibrate`` is set.  With
    calibration targets and a fixed Zeeman shift the detunings are solved at
    the configured pump rate; without a Zeeman shift both the shift and the
    pump rate are solved for.
    """
    sysc = cfg.system
    if cfg.drives is not None and not recalibrate:
        if sysc.zeeman_q_hz is None:
            raise ConfigError("explicit drives need system.zeeman_q_hz")
        params = sysc.params()
        c = derive_constants(params)
        model = RotorModel(params, c)
        tight, wide = cfg.drives.tight.point(), cfg.drives.wide.point()
        return Calibration(params, tight, wide, model.omega(tight), model.omega(wide))
    if cfg.calibration is None:
        raise ConfigError("calibration targets are required")
    w_tight = 2 * math.pi * cfg.calibration.omega_tight_hz
    w_wide = 2 * math.pi * cfg.calibration.omega_wide_hz
    if sysc.zeeman_q_hz is None:
        return calibrate_frequencies(sysc.params(), w_tight, w_wide)
    if cfg.drives is None:
        raise ConfigError("a fixed Zeeman shift needs drives.tight.eta_hz to calibrate against")
    params = sysc.params()
    c = derive_constants(params)
    eta = cfg.drives.tight.point().eta
    tight = solve_detuning(w_tight, eta, c, params)
    wide = solve_detuning(w_wide, eta, c, params)
    model = RotorModel(params, c)
    return Calibration(params, tight, wide, model.omega(tight), model.omega(wide))


def build_schedule(cfg: RunConfig, cal: Calibration):
    p = cfg.protocol
    spec = SqueezeProtocolSpec(
        n_cycles=p.n_cycles,
        omega_tight=cal.omega_tight,
        omega_wide=cal.omega_wide,
        switch_time=p.switch_time_us * 1e-6,
        drive_tight=cal.drive_tight,
        drive_wide=cal.drive_wide,
        prep_time=p.prep_time_us * 1e-6,
    )
    sched = make_squeeze_schedule(spec)
    if p.post_hold_us > 0:
        sched = DriveSchedule(sched.segments + (
            Segment.hold(p.post_hold_us * 1e-6, cal.drive_tight, "post_hold"),))
    return spec, sched


def check_resolution(state: RotorState, tail: float = 1e-6, label: str = "state") -> None:
    """Reject states with weight near the grid's momentum cutoff or window edge."""
    grid = state.grid
    phi = np.abs(state.momentum_amplitudes()) ** 2
    phi /= phi.sum()
    k = np.abs(grid.wavenumbers)
    hi = float(phi[k > 0.9 * k.max()].sum())
    if hi > tail:
        raise ConvergenceError(
            f"{label}: probability {hi:.3g} in the outer tenth of the momentum range; "
            "increase grid.n_points or reduce grid.period_rad")
    if not grid.is_full_circle:
        w = state.density / state.density.sum()
        edge = float(w[np.abs(grid.theta - grid.center) > 0.45 * grid.period].sum())
        if edge > tail:
            raise ConvergenceError(
                f"{label}: probability {edge:.3g} near the edge of the angular window; "
                "increase grid.period_rad")


@dataclass
class SimulationResult:
    config: RunConfig
    calibration: Calibration
    model: RotorModel
    spec: SqueezeProtocolSpec
    schedule: DriveSchedule
    grid: AngularGrid
    dt: float
    omega_ref: float
    initial: RotorState
    trajectory: Trajectory
    g2: Optional[G2Series]
    events: Dict[str, float]
    wall_time: float
    atom_number: float = field(default=0.0)

    def series(self) -> Dict[str, np.ndarray]:
        tr = self.trajectory
        out = {"time": tr.times}
        for key in SERIES_COLUMNS[1:]:
            if key == "g2":
                out[key] = (self.g2.g2_values if self.g2 is not None
                            else np.full(len(tr.times), np.nan))
            else:
                out[key] = tr.records[key]
        return out

    def final_moments(self) -> Dict[str, float]:
        m = moments(self.trajectory.final, omega_ref=self.omega_ref, check=False)
        return {
            "mean_theta": m.mean_theta, "var_theta": m.var_theta, "mean_l": m.mean_l,
            "var_l": m.var_l, "covar": m.covar, "squeeze_angle": m.squeeze_angle,
            "min_variance_ratio": m.min_variance_ratio,
        }

    def states(self) -> Dict[str, RotorState]:
        out = dict(self.trajectory.snapshots)
        out.setdefault("final", self.trajectory.final)
        return out


def snapshot_requests(cfg: RunConfig, events: Dict[str, float], total: float) -> Dict[str, float]:
    req = {}
    for label in cfg.observers.wigner_events:
        if label not in events:
            raise ConfigError(f"unknown snapshot event {label!r}; available: {sorted(events)}")
        req[label] = events[label]
    for t_us in cfg.observers.wigner_times_us:
        t = t_us * 1e-6
        if t > total * (1 + 1e-12):
            raise ConfigError(f"snapshot time {t_us} us beyond the schedule end {total * 1e6:.6g} us")
        req[f"t_{t_us:g}us"] = t
    return req


def simulate(cfg: RunConfig, atom_number: Optional[float] = None,
             rng: Optional[np.random.Generator] = None, photon_refresh: str = "segment",
             calibration: Optional[Calibration] = None, check: bool = True) -> SimulationResult:
    """Prepare the tight-trap ground state and run the squeezing protocol.

    The protocol timing comes from the nominal calibration; ``atom_number``
    replaces the atom number of the simulated system (shot-to-shot noise)
    and ``rng`` switches on photon noise.
    """
    t_start = time.perf_counter()
    cal = calibration if calibration is not None else resolve_system(cfg)
    params = cal.params if atom_number is None else cal.params.with_atom_number(atom_number)
    model = RotorModel.from_params(params)
    spec, sched = build_schedule(cfg, cal)
    g = cfg.grid
    grid = AngularGrid(g.n_points, g.period_rad, g.center_rad)

    omega_ref = model.omega_dimless(cal.drive_tight)
    if cfg.protocol.dt_us is not None:
        dt = cfg.protocol.dt_us * 1e-6
    else:
        # from the nominal system, so that noisy trajectories share a time axis
        nominal = RotorModel.from_params(cal.params)
        dt = default_dt(grid, nominal.omega_dimless(cal.drive_tight)) * nominal.t0

    v_tight = model.potential_energy(grid.theta, cal.drive_tight)
    initial = ground_state(grid, v_tight, tol=1e-10 * max(1.0, omega_ref))

    events = event_times(sched)
    obs = cfg.observers
    if obs.g2 and obs.moments_stride == 0:
        raise ConfigError("g2 output needs observers.moments_stride > 0")
    k_max = float(np.abs(grid.wavenumbers).max())

    def guard(t, sample):
        if 5.0 * math.sqrt(sample["var_l"]) > k_max:
            raise ConvergenceError(
                f"angular-momentum spread {math.sqrt(sample['var_l']):.4g} at t = {t * 1e6:.4g} us "
                f"is too close to the grid cutoff {k_max:.4g}")
        if not grid.is_full_circle and 5.0 * math.sqrt(sample["var_theta"]) > 0.5 * grid.period:
            raise ConvergenceError(
                f"angular spread {math.sqrt(sample['var_theta']):.4g} rad at t = {t * 1e6:.4g} us "
                f"outgrew the window of {grid.period:.4g} rad")

    observers = Observers(
        guard=guard if check else None,
        stride=obs.moments_stride,
        snapshot_times=snapshot_requests(cfg, events, sched.total_duration),
        omega_ref=omega_ref,
        refresh_photons=photon_refresh,
    )
    noise = None
    if rng is not None and len(sched):
        noise = sample_photon_noise(count_nodes(sched, dt), dt, params.kappa, rng)
    traj = evolve(initial, sched, model, dt, noise=noise, observers=observers)
    if check:
        check_resolution(traj.final, label="final state")
        for label, st in traj.snapshots.items():
            check_resolution(st, label=f"snapshot {label}")
    g2 = None
    if obs.g2:
        g2 = g2_series(traj, params, obs.photon_floor)
    return SimulationResult(
        config=cfg, calibration=cal, model=model, spec=spec, schedule=sched, grid=grid,
        dt=dt, omega_ref=omega_ref, initial=initial, trajectory=traj, g2=g2, events=events,
        wall_time=time.perf_counter() - t_start,
        atom_number=params.N,
    )
