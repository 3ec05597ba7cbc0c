"""Split-operator propagation of the rotor wavefunction.

Real-time steps use the symmetric splitting

    psi(t + h) = exp(-i h V(t+h) / 2) F^-1 exp(-i h k^2 / 2) F exp(-i h V(t) / 2) psi(t)

with ``F`` the discrete Fourier transform on the periodic angular grid.
Stationary states come from two independent routes: dense diagonalization
of the grid Hamiltonian and imaginary-time propagation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .errors import ConvergenceError, ParameterError
from .grid import AngularGrid, RotorState
from .model import DrivePoint, RotorModel, bare_potential, effective_potential_gradient
from .schedule import DriveSchedule


@dataclass(frozen=True)
class ClassicalPoint:
    theta: float
    l_theta: float


def default_dt(grid: AngularGrid, omega: float) -> float:
    """Default dimensionless step ``min(0.05 / omega, 2 pi / (50 eps_max))``."""
    return min(0.05 / omega, 2.0 * math.pi / (50.0 * grid.max_kinetic))


# -- stationary states ----------------------------------------------------

def kinetic_matrix(grid: AngularGrid) -> np.ndarray:
    """Dense spectral representation of ``l^2 / 2`` in the grid basis."""
    n = grid.n_points
    # T = F^-1 diag(k^2/2) F; real symmetric because k^2 is even in k
    t = sfft.ifft(grid.kinetic[:, None] * sfft.fft(np.eye(n), axis=0), axis=0)
    return np.ascontiguousarray(t.real)


def stationary_states(grid: AngularGrid, potential, k: int, beta: float = 1.0):
    """Lowest ``k`` eigenpairs of ``l^2/2 + beta * potential``, ascending.

    Returns a list of ``(energy, RotorState)``.
    """
    if k < 1 or k > grid.n_points // 4:
        raise ParameterError(f"k must lie in [1, n_points/4], got {k}")
    h = kinetic_matrix(grid)
    h[np.diag_indices_from(h)] += beta * np.asarray(potential, dtype=float)
    try:
        w, v = sla.eigh(h, subset_by_index=(0, k - 1), driver="evr")
    except (sla.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    scale = 1.0 / math.sqrt(grid.dtheta)
    out = []
    for j in range(k):
        psi = v[:, j] * scale
        # fix the arbitrary sign so that the largest lobe is positive
        if psi[np.argmax(np.abs(psi))] < 0:
            psi = -psi
        out.append((float(w[j]), RotorState(psi.astype(complex), grid)))
    return out


def energy(state: RotorState, potential, beta: float = 1.0) -> float:
    """Expectation value of ``l^2/2 + beta * potential``."""
    psi = state.amplitudes
    phi = sfft.fft(psi)
    kin = np.sum(state.grid.kinetic * np.abs(phi) ** 2) / np.sum(np.abs(phi) ** 2)
    pot = np.sum(beta * np.asarray(potential) * np.abs(psi) ** 2) / np.sum(np.abs(psi) ** 2)
    return float(kin + pot)


def _curvature_estimate(grid: AngularGrid, energy_samples: np.ndarray) -> float:
    i = int(np.argmin(energy_samples))
    n = grid.n_points
    v0, vm, vp = energy_samples[i], energy_samples[(i - 1) % n], energy_samples[(i + 1) % n]
    return (vp + vm - 2.0 * v0) / grid.dtheta**2


def ground_state(grid: AngularGrid, potential, beta: float = 1.0, tol: float = 1e-10,
                 max_iter: int = 200_000, dtau: Optional[float] = None,
                 initial: Optional[RotorState] = None) -> RotorState:
    """Ground state by imaginary-time split-operator propagation.

    The step is refined geometrically until the energy changes by less than
    ``tol`` between refinements.  The energy is the exact grid Rayleigh
    quotient, so it converges from above to the lowest eigenvalue.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    v = beta * np.asarray(potential, dtype=float)
    v = v - v.min()
    curv = _curvature_estimate(grid, v)
    omega = math.sqrt(curv) if curv > 0 else 0.0

    if initial is not None:
        psi = initial.amplitudes.copy()
    elif omega > 0 and 1.0 / math.sqrt(2.0 * omega) < grid.period / 8:
        centre = grid.theta[int(np.argmin(v))]
        psi = RotorState.gaussian(grid, 1.0 / math.sqrt(2.0 * omega), centre).amplitudes
    else:
        psi = np.ones(grid.n_points, dtype=complex)
    psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dtheta)

    scale = max(omega, grid.dk**2, 1e-300)
    h = dtau if dtau is not None else 0.5 / scale
    kin = grid.kinetic
    e_prev_level = math.inf
    iters = 0
    while True:
        half = np.exp(-0.5 * h * v)
        full_k = np.exp(-h * kin)
        e_prev = math.inf
        check = 16
        while True:
            for _ in range(check):
                psi = half * sfft.ifft(full_k * sfft.fft(half * psi))
                psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dtheta)
            iters += check
            e = energy(RotorState(psi, grid), v)
            if abs(e_prev - e) <= 0.1 * tol or iters >= max_iter:
                break
            e_prev = e
        if abs(e_prev_level - e) <= tol and abs(e_prev - e) <= 0.1 * tol:
            break
        if iters >= max_iter:
            raise ConvergenceError(
                f"imaginary-time propagation did not converge in {max_iter} steps "
                f"(last energy change {abs(e_prev_level - e):.3g})")
        e_prev_level = e
        h *= 0.25
    return RotorState(psi, grid)


# -- real-time propagation ------------------------------------------------

def step(state: RotorState, potential, dt: float, beta: float = 1.0,
         potential_next=None) -> RotorState:
    """One symmetric split-operator step of dimensionless length ``dt``.

    ``potential_next`` is the potential at the end of the step; it defaults
    to ``potential`` (static Hamiltonian).
    """
    grid = state.grid
    v0 = np.asarray(potential, dtype=float)
    v1 = v0 if potential_next is None else np.asarray(potential_next, dtype=float)
    psi = np.exp(-0.5j * dt * beta * v0) * state.amplitudes
    psi = sfft.ifft(np.exp(-1j * dt * grid.kinetic) * sfft.fft(psi))
    psi = np.exp(-0.5j * dt * beta * v1) * psi
    return RotorState(psi, grid, state.time + dt)


def propagate(state: RotorState, potential, dt: float, n_steps: int, beta: float = 1.0) -> RotorState:
    """``n_steps`` static steps, fusing adjacent potential half-steps."""
    grid = state.grid
    half = np.exp(-0.5j * dt * beta * np.asarray(potential, dtype=float))
    full = half * half
    kin = np.exp(-1j * dt * grid.kinetic)
    psi = half * state.amplitudes
    for i in range(n_steps):
        psi = sfft.ifft(kin * sfft.fft(psi))
        psi *= full if i < n_steps - 1 else half
    if n_steps == 0:
        psi = state.amplitudes.copy()
    return RotorState(psi, grid, state.time + n_steps * dt)


def segment_steps(duration: float, dt: float) -> int:
    if duration == 0:
        return 0
    return max(1, int(math.ceil(abs(duration / dt) - 1e-9)))


def count_nodes(schedule: DriveSchedule, dt: float) -> int:
    """Number of time nodes (steps + 1) :func:`evolve` visits."""
    return 1 + sum(segment_steps(s.duration, dt) for s in schedule.merged().segments)


@dataclass
class IntensityPath:
    """Multiplicative factors on the cavity term, one per time node."""

    factors: np.ndarray
    dt: float
    correlation_time: float

    def factor(self, node: int, mean_photons: float) -> float:
        return float(self.factors[node])

    def __len__(self):
        return len(self.factors)


@dataclass
class PhotonNoise:
    """Unit-variance intensity fluctuations rescaled by the photon number.

    The factor at node ``j`` is ``max(0, 1 + xi[j] / sqrt(n))`` where ``n`` is
    the steady photon number supplied by the integrator.
    """

    unit_path: np.ndarray
    dt: float
    correlation_time: float

    def factor(self, node: int, mean_photons: float) -> float:
        if mean_photons <= 0:
            return 1.0
        return max(0.0, 1.0 + float(self.unit_path[node]) / math.sqrt(mean_photons))

    def __len__(self):
        return len(self.unit_path)


@dataclass
class Observers:
    """What :func:`evolve` records.

    ``stride`` counts steps between moment samples (0 disables them);
    ``snapshot_times`` (seconds) select stored wavefunctions;
    ``omega_ref`` (dimensionless) sets the zero-point scale of the squeezing
    diagnostics.  ``guard(time, sample)`` is called after every moment
    sample and may raise to abort the run.
    """

    stride: int = 0
    snapshot_times: Dict[str, float] = field(default_factory=dict)
    omega_ref: Optional[float] = None
    refresh_photons: str = "segment"
    guard: Optional[Callable[[float, Dict[str, float]], None]] = None


@dataclass
class Trajectory:
    times: np.ndarray
    records: Dict[str, np.ndarray]
    snapshots: Dict[str, RotorState]
    final: RotorState
    n_steps: int

    def moment_table(self):
        return self.records


RECORD_KEYS = ("mean_theta", "var_theta", "mean_l", "var_l", "covar",
               "squeeze_angle", "min_variance_ratio", "mean_V", "var_V",
               "eta", "delta", "n_photons")


def evolve(state: RotorState, schedule: DriveSchedule, model: RotorModel, dt: float,
           noise=None, observers: Optional[Observers] = None) -> Trajectory:
    """Integrate the time-dependent Schroedinger equation along a schedule.

    ``dt`` is the largest physical step in seconds (negative to integrate
    backwards); every segment is divided into an integer number of equal
    steps.  ``noise`` is an :class:`IntensityPath` or :class:`PhotonNoise`
    with one entry per time node, see :func:`count_nodes`.
    """
    from .analysis import moments

    if dt == 0:
        raise ParameterError("dt must be non-zero")
    observers = observers or Observers()
    schedule = schedule.merged()
    n_nodes = count_nodes(schedule, dt)
    if noise is not None and len(noise) != n_nodes:
        raise ParameterError(f"noise path has {len(noise)} entries, schedule needs {n_nodes}")

    grid = state.grid
    theta = grid.theta
    t0 = model.t0
    sign = 1.0 if dt > 0 else -1.0
    v_bare = bare_potential(theta, model.constants)

    times: List[float] = []
    rec: Dict[str, List[float]] = {k: [] for k in RECORD_KEYS}
    snapshots: Dict[str, RotorState] = {}
    pending = sorted(observers.snapshot_times.items(), key=lambda kv: kv[1])
    pending_times = [t for _, t in pending]
    snap_eps = 1e-9 * max(schedule.total_duration, abs(dt))

    psi = state.amplitudes.copy()
    t_phys = 0.0
    node = 0
    n_photons = 0.0

    def mean_bare(p):
        w = np.abs(p) ** 2
        return float(np.sum(w * v_bare) / np.sum(w))

    def record(p, drive):
        s = RotorState(p, grid, state.time + sign * t_phys / t0)
        m = moments(s, omega_ref=observers.omega_ref, check=False)
        w = np.abs(p) ** 2
        w = w / np.sum(w)
        mv = float(np.sum(w * v_bare))
        times.append(sign * t_phys)
        for key in ("mean_theta", "var_theta", "mean_l", "var_l", "covar",
                    "squeeze_angle", "min_variance_ratio"):
            rec[key].append(getattr(m, key))
        rec["mean_V"].append(mv)
        rec["var_V"].append(float(np.sum(w * (v_bare - mv) ** 2)))
        rec["eta"].append(drive.eta)
        rec["delta"].append(drive.delta)
        rec["n_photons"].append(model.mean_photons(mv, drive))
        if observers.guard is not None:
            observers.guard(sign * t_phys, {k: v[-1] for k, v in rec.items()})

    def take_snapshots(p):
        while pending and pending_times[0] <= t_phys + snap_eps:
            label, _ = pending.pop(0)
            pending_times.pop(0)
            snapshots[label] = RotorState(p.copy(), grid, state.time + sign * t_phys / t0)

    def factor_at(j, drive):
        if noise is None:
            return 1.0
        return noise.factor(j, n_photons)

    segs = schedule.segments
    first_drive = segs[0].start if segs else None
    if isinstance(noise, PhotonNoise) and segs:
        n_photons = model.mean_photons(mean_bare(psi), first_drive)
    if observers.stride and segs:
        record(psi, first_drive)
    take_snapshots(psi)

    steps_done = 0
    seg_start = 0.0
    for seg in segs:
        n = segment_steps(seg.duration, dt)
        if n == 0:
            continue
        h_phys = sign * seg.duration / n
        h = h_phys / t0
        kin = np.exp(-1j * h * grid.kinetic)
        if isinstance(noise, PhotonNoise):
            n_photons = model.mean_photons(mean_bare(psi), seg.start)
        static = seg.shape == "constant" and noise is None
        drive = seg.drive_at(0.0)
        if seg.shape == "constant":
            # only the noise factor changes inside a hold
            v_base = model.beta * v_bare
            v_cav = model.cavity_term(v_bare, drive)

            def potential(d, f):
                return v_base + f * v_cav
        else:
            def potential(d, f):
                return model.potential_energy(theta, d, f)
        v_cur = potential(drive, factor_at(node, drive))
        half_static = np.exp(-0.5j * h * v_cur) if static else None
        for j in range(1, n + 1):
            local_next = j * seg.duration / n
            drive_next = seg.drive_at(local_next)
            if static:
                psi = half_static * psi
                psi = sfft.ifft(kin * sfft.fft(psi))
                psi = half_static * psi
            else:
                if (isinstance(noise, PhotonNoise)
                        and observers.refresh_photons == "step"):
                    n_photons = model.mean_photons(mean_bare(psi), drive_next)
                v_next = potential(drive_next, factor_at(node + 1, drive_next))
                psi = np.exp(-0.5j * h * v_cur) * psi
                psi = sfft.ifft(kin * sfft.fft(psi))
                psi = np.exp(-0.5j * h * v_next) * psi
                v_cur = v_next
            node += 1
            steps_done += 1
            t_phys = seg_start + local_next
            if observers.stride and steps_done % observers.stride == 0:
                record(psi, drive_next)
            take_snapshots(psi)
        seg_start += seg.duration

    if observers.stride and segs and steps_done % observers.stride != 0:
        record(psi, segs[-1].end)
    # snapshots requested at or beyond the end
    t_phys = max(t_phys, schedule.total_duration)
    take_snapshots(psi)
    final = RotorState(psi, grid, state.time + sign * t_phys / t0)
    return Trajectory(
        times=np.asarray(times),
        records={k: np.asarray(v) for k, v in rec.items()},
        snapshots=snapshots,
        final=final,
        n_steps=steps_done,
    )


# -- classical reference --------------------------------------------------

@dataclass
class ClassicalTrajectory:
    times: np.ndarray  # seconds
    theta: np.ndarray
    l_theta: np.ndarray

    def points(self) -> List[ClassicalPoint]:
        return [ClassicalPoint(float(a), float(b)) for a, b in zip(self.theta, self.l_theta)]


def classical_energy(point: ClassicalPoint, model: RotorModel, drive: DrivePoint) -> float:
    return 0.5 * point.l_theta**2 + float(model.potential_energy(point.theta, drive))


def ehrenfest_reference(start: ClassicalPoint, schedule: DriveSchedule, model: RotorModel,
                        dt: float) -> ClassicalTrajectory:
    """Classical angle dynamics ``I theta'' = -q dV_eff/dtheta`` by velocity Verlet.

    Works in the dimensionless units of ``model``: ``l_theta = L / hbar``.
    """
    schedule = schedule.merged()
    t0 = model.t0
    theta, l = float(start.theta), float(start.l_theta)
    times, th, ls = [0.0], [theta], [l]
    t = 0.0

    def force(x, drive):
        return -model.beta * float(effective_potential_gradient(
            x, model.constants, drive, model.params))

    for seg in schedule.segments:
        n = segment_steps(seg.duration, dt)
        if n == 0:
            continue
        h_phys = seg.duration / n
        h = h_phys / t0
        f = force(theta, seg.drive_at(0.0))
        for j in range(1, n + 1):
            l += 0.5 * h * f
            theta += h * l
            f = force(theta, seg.drive_at(j * h_phys))
            l += 0.5 * h * f
            t += h_phys
            times.append(t)
            th.append(theta)
            ls.append(l)
    return ClassicalTrajectory(np.asarray(times), np.asarray(th), np.asarray(ls))
