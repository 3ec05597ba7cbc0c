"""Self-checks run by ``cavityrotor validate``.

Each suite returns :class:`CheckResult` entries carrying the measured value
and the tolerance it was held to.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List

import numpy as np

from .analysis import moments
from .config import RunConfig
from .dynamics import (Observers, default_dt, energy, evolve, ground_state, propagate,
                       stationary_states)
from .grid import AngularGrid, RotorState
from .model import RotorModel
from .oracle import compare_with_rotor, exact_spectrum, sector_dimension, total_spin_levels
from .protocol import SqueezeProtocolSpec, TimingWarning, gaussian_covariance_oracle
from .runner import build_schedule, resolve_system


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = bool(d["passed"])
        d["measured"] = float(d["measured"])
        return d


def _setup(cfg: RunConfig):
    cal = resolve_system(cfg)
    model = RotorModel.from_params(cal.params)
    g = cfg.grid
    grid = AngularGrid(g.n_points, g.period_rad, g.center_rad)
    omega = model.omega_dimless(cal.drive_tight)
    if cfg.protocol.dt_us is not None:
        dt = cfg.protocol.dt_us * 1e-6 / model.t0
    else:
        dt = default_dt(grid, omega)
    return cal, model, grid, omega, dt


def suite_oracle(cfg: RunConfig) -> List[CheckResult]:
    out = []
    e2 = exact_spectrum(2, 1.0, 0.0)
    err = float(np.max(np.abs(e2 - np.array([0.0, 3.0]))))
    out.append(CheckResult("oracle", "N=2 spectrum {0, 3 c2}", err <= 1e-12, err, 1e-12))
    worst_dim = 0
    worst_lvl = 0.0
    for n in range(1, 41):
        levels = exact_spectrum(n, 1.0, 0.0)
        worst_dim = max(worst_dim, abs(len(levels) - (n // 2 + 1)),
                        abs(sector_dimension(n) - (n // 2 + 1)))
        worst_lvl = max(worst_lvl, float(np.max(np.abs(levels - total_spin_levels(n, 1.0)))))
    out.append(CheckResult("oracle", "sector dimension floor(N/2)+1, N<=40", worst_dim == 0,
                           worst_dim, 0))
    out.append(CheckResult("oracle", "q=0 levels (c2/N) F(F+1), N<=40", worst_lvl <= 1e-10,
                           worst_lvl, 1e-10))
    comps = compare_with_rotor(cfg.validation.oracle_atom_numbers, 1.0, 0.05)
    key = comps[-1].best
    devs = [c.mean_abs_deviation(key) for c in comps]
    shrinking = all(b < a for a, b in zip(devs, devs[1:]))
    out.append(CheckResult(
        "oracle", f"rotor gaps approach exact gaps with N ({key[0]}, {key[1]})", shrinking,
        devs[-1], devs[0], detail="mean |relative gap deviation| per N: "
        + ", ".join(f"N={c.N}: {d:.4g}" for c, d in zip(comps, devs))))
    return out


def energy_drift(state: RotorState, potential, dt: float, n_steps: int, n_samples: int = 200):
    """Norm drift, secular energy drift and peak energy excursion (both relative).

    The symmetric splitting conserves a modified Hamiltonian, so the
    measured energy oscillates at order ``dt**2`` without growing.  The
    drift is the change of a least-squares line through the sampled
    energies over the whole run; the excursion is the largest deviation
    from the initial energy.
    """
    chunk = max(1, n_steps // n_samples)
    e0 = energy(state, potential)
    times, energies = [0], [e0]
    psi = state
    done = 0
    while done < n_steps:
        m = min(chunk, n_steps - done)
        psi = propagate(psi, potential, dt, m)
        done += m
        times.append(done)
        energies.append(energy(psi, potential))
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies)
    slope = np.polyfit(t, e, 1)[0]
    drift = abs(slope * n_steps) / abs(e0)
    excursion = float(np.max(np.abs(e - e0)) / abs(e0))
    return abs(psi.norm - state.norm), drift, excursion


def suite_conservation(cfg: RunConfig, n_steps: int = 100_000) -> List[CheckResult]:
    cal, model, grid, omega, dt = _setup(cfg)
    v = model.potential_energy(grid.theta, cal.drive_tight)
    v = v - v.min()
    sigma = 1.0 / math.sqrt(2.0 * omega)
    psi0 = RotorState.gaussian(grid, sigma, center=grid.center + sigma)
    norm_drift, e_drift, excursion = energy_drift(psi0, v, dt, n_steps)
    return [
        CheckResult("conservation", f"norm drift over {n_steps} steps", norm_drift < 1e-10,
                    norm_drift, 1e-10),
        CheckResult("conservation", f"relative energy drift over {n_steps} steps", e_drift < 1e-8,
                    e_drift, 1e-8, detail=f"bounded oscillation amplitude {excursion:.3g}"),
    ]


def convergence_errors(cfg: RunConfig, n_steps: int = None):
    """L2 errors of a displaced packet after ``n_steps`` steps of the configured dt.

    Returns ``(dt, err(dt), err(dt/2))`` measured against a dt/8 reference.
    """
    cal, model, grid, omega, dt = _setup(cfg)
    n_steps = n_steps or cfg.validation.convergence_steps
    v = model.potential_energy(grid.theta, cal.drive_tight)
    v = v - v.min()
    sigma = 1.0 / math.sqrt(2.0 * omega)
    psi0 = RotorState.gaussian(grid, sigma, center=grid.center + sigma)
    ref = propagate(psi0, v, dt / 8, 8 * n_steps).amplitudes
    errs = []
    for k in (1, 2):
        a = propagate(psi0, v, dt / k, k * n_steps).amplitudes
        errs.append(math.sqrt(float(np.sum(np.abs(a - ref) ** 2)) * grid.dtheta))
    return dt, errs[0], errs[1]


def suite_convergence(cfg: RunConfig) -> List[CheckResult]:
    abs_tol = cfg.validation.convergence_abs_tol
    lo, hi = cfg.validation.convergence_ratio_range
    dt, e1, e2 = convergence_errors(cfg)
    ratio = e1 / e2 if e2 > 0 else math.inf
    out = [
        CheckResult("convergence", "dt-halving error ratio (second order)", lo <= ratio <= hi,
                    ratio, hi, detail=f"allowed [{lo}, {hi}]; err(dt)={e1:.3e}, err(dt/2)={e2:.3e}"),
        CheckResult("convergence", "absolute error at configured dt", e1 <= abs_tol, e1, abs_tol,
                    detail=f"dt = {dt:.4g} t0"),
    ]
    out.append(grid_doubling_check(cfg))
    return out


def grid_doubling_check(cfg: RunConfig) -> CheckResult:
    """Moments after one protocol cycle on ``n`` and ``2n`` grid points."""
    tol = cfg.validation.grid_tolerance
    n = max(512, cfg.grid.n_points)
    base = cfg.replace()
    base.grid.n_points = n
    dt = _setup(base)[4]
    vals = []
    for points in (n, 2 * n):
        c = cfg.replace()
        c.grid.n_points = points
        c.protocol.n_cycles = 1
        c.protocol.prep_time_us = 0.0
        c.protocol.post_hold_us = 0.0
        vals.append(_cycle_moments(c, dt))
    a, b = vals
    rel = max(abs(x - y) / max(abs(y), 1e-300) for x, y in zip(a, b))
    return CheckResult("convergence", f"moment change on doubling n_points {n}->{2 * n}",
                       rel < tol, rel, tol)


def _cycle_moments(cfg: RunConfig, dt: float):
    cal, model, grid, omega, _ = _setup(cfg)
    v = model.potential_energy(grid.theta, cal.drive_tight)
    (_, gs), = stationary_states(grid, v, 1)
    _, sched = build_schedule(cfg, cal)
    traj = evolve(gs, sched, model, dt * model.t0)
    m = moments(traj.final, omega_ref=omega, check=False)
    return (m.var_theta, m.var_l, m.covar_theta_l)


def suite_ground_state(cfg: RunConfig) -> List[CheckResult]:
    cal, model, grid, omega, _ = _setup(cfg)
    v = model.potential_energy(grid.theta, cal.drive_tight)
    gs = ground_state(grid, v, tol=1e-10 * max(1.0, omega))
    (e_dense, dense), = stationary_states(grid, v, 1) if grid.n_points <= 2048 else [(None, None)]
    m = moments(gs, omega_ref=omega)
    prod = m.var_theta * m.var_l
    out = [CheckResult("ground_state", "Var theta * Var L = 1/4", abs(prod - 0.25) <= 1e-3,
                       abs(prod - 0.25), 1e-3)]
    if dense is not None:
        de = abs(energy(gs, v) - e_dense) / abs(e_dense)
        out.append(CheckResult("ground_state", "imaginary time vs dense eigensolver energy",
                               de <= 1e-8, de, 1e-8))
    return out


def suite_squeezing(cfg: RunConfig, n_cycles: int = 3, tol: float = 0.02) -> List[CheckResult]:
    c = cfg.replace()
    c.protocol.n_cycles = n_cycles
    c.protocol.switch_time_us = 0.0
    c.protocol.prep_time_us = 0.0
    c.protocol.post_hold_us = 0.0
    cal, model, grid, omega, dt = _setup(c)
    v = model.potential_energy(grid.theta, cal.drive_tight)
    gs = ground_state(grid, v, tol=1e-10 * max(1.0, omega))
    spec, sched = build_schedule(c, cal)
    ends = {f"cycle_{k}": (k) * spec.cycle_duration for k in range(1, n_cycles + 1)}
    traj = evolve(gs, sched, model, dt * model.t0, observers=Observers(snapshot_times=ends))
    oracle = gaussian_covariance_oracle(spec, t0=model.t0)
    out = []
    for k in range(1, n_cycles + 1):
        m = moments(traj.snapshots[f"cycle_{k}"], omega_ref=omega, check=False)
        cov = oracle[k - 1]
        scaled = np.array([[omega * cov[0, 0], cov[0, 1]], [cov[0, 1], cov[1, 1] / omega]])
        want = float(np.linalg.eigvalsh(scaled)[0] / 0.5)
        rel = abs(m.min_variance_ratio - want) / want
        out.append(CheckResult("squeezing", f"cycle {k} squeezed variance vs Gaussian oracle",
                               rel <= tol, rel, tol,
                               detail=f"simulated {m.min_variance_ratio:.6g}, oracle {want:.6g}"))
    return out


SUITES: Dict[str, Callable[[RunConfig], List[CheckResult]]] = {
    "oracle": suite_oracle,
    "conservation": suite_conservation,
    "convergence": suite_convergence,
    "ground_state": suite_ground_state,
    "squeezing": suite_squeezing,
}


def run_validation(cfg: RunConfig) -> List[CheckResult]:
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TimingWarning)
        for name in cfg.validation.suites:
            results.extend(SUITES[name](cfg))
    return results
