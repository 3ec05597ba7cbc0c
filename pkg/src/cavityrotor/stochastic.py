"""Noise sources and ensemble runs.

Photon noise is a stationary Ornstein-Uhlenbeck process multiplying the
cavity part of the effective potential: mean 1, variance ``1 / n`` for a
coherent field with ``n`` photons, correlation time ``1 / kappa``.  Atom
number fluctuates from shot to shot.

Seeding rule: trajectory ``i`` of an ensemble with master seed ``s`` draws
from ``numpy.random.default_rng(SeedSequence(s).spawn(n)[i])``.  Within a
trajectory the atom number is drawn first, then the unit OU path.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.signal import lfilter

from .dynamics import IntensityPath, PhotonNoise
from .errors import ParameterError, RotorError

DISTRIBUTIONS = ("gaussian", "poisson")


class CorrelationWarning(RuntimeWarning):
    """The time step does not resolve the cavity correlation time."""


@dataclass(frozen=True)
class NoiseConfig:
    photon_noise_enabled: bool = False
    atom_number_sigma_rel: float = 0.05
    seed: int = 0
    n_trajectories: int = 1
    atom_number_distribution: str = "gaussian"
    photon_refresh: str = "segment"

    def __post_init__(self):
        if not self.atom_number_sigma_rel >= 0:
            raise ParameterError("atom_number_sigma_rel must be non-negative")
        if self.n_trajectories < 1:
            raise ParameterError("n_trajectories must be at least 1")
        if self.atom_number_distribution not in DISTRIBUTIONS:
            raise ParameterError(f"unknown distribution {self.atom_number_distribution!r}")
        if self.photon_refresh not in ("segment", "step"):
            raise ParameterError("photon_refresh must be 'segment' or 'step'")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")

    @property
    def is_silent(self) -> bool:
        return not self.photon_noise_enabled and self.atom_number_sigma_rel == 0


def unit_ou_path(n_steps: int, dt: float, kappa: float, rng: np.random.Generator) -> np.ndarray:
    """Stationary zero-mean, unit-variance OU samples spaced by ``dt``.

    Uses the exact update ``x <- x exp(-kappa dt) + sqrt(1 - exp(-2 kappa dt)) xi``.
    """
    if n_steps < 0:
        raise ParameterError("n_steps must be non-negative")
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    if n_steps == 0:
        return np.zeros(0)
    a = math.exp(-kappa * abs(dt))
    innov = rng.standard_normal(n_steps)
    innov[1:] *= math.sqrt(-math.expm1(-2.0 * kappa * abs(dt)))
    return lfilter([1.0], [1.0, -a], innov)


def sample_intensity_path(n_steps: int, dt: float, kappa: float, mean_photons: float,
                          rng: np.random.Generator) -> IntensityPath:
    """Intensity factors ``max(0, 1 + x / sqrt(mean_photons))`` for a unit OU ``x``."""
    if not mean_photons > 0:
        raise ParameterError(f"mean_photons must be positive, got {mean_photons}")
    if abs(dt) * kappa >= 1.0:
        warnings.warn(f"dt = {dt:.3g} s does not resolve 1/kappa = {1 / kappa:.3g} s",
                      CorrelationWarning, stacklevel=2)
    x = unit_ou_path(n_steps, dt, kappa, rng)
    factors = np.maximum(0.0, 1.0 + x / math.sqrt(mean_photons))
    return IntensityPath(factors=factors, dt=dt, correlation_time=1.0 / kappa)


def sample_photon_noise(n_nodes: int, dt: float, kappa: float,
                        rng: np.random.Generator) -> PhotonNoise:
    """Unit OU path whose amplitude follows the instantaneous photon number."""
    if abs(dt) * kappa >= 1.0:
        warnings.warn(f"dt = {dt:.3g} s does not resolve 1/kappa = {1 / kappa:.3g} s",
                      CorrelationWarning, stacklevel=2)
    return PhotonNoise(unit_ou_path(n_nodes, dt, kappa, rng), dt, 1.0 / kappa)


def sample_atom_number(nominal_N: float, sigma_rel: float, rng: np.random.Generator,
                       distribution: str = "gaussian") -> float:
    """Shot-to-shot atom number, rounded to an integer and floored at 1.

    ``distribution="poisson"`` draws from a Poisson law with mean
    ``nominal_N`` and ignores ``sigma_rel``.
    """
    if not 0 <= sigma_rel < 0.5:
        raise ParameterError(f"sigma_rel must lie in [0, 0.5), got {sigma_rel}")
    if distribution == "poisson":
        return float(max(1, rng.poisson(nominal_N)))
    if distribution != "gaussian":
        raise ParameterError(f"unknown distribution {distribution!r}")
    if sigma_rel == 0:
        return float(nominal_N)
    return float(max(1.0, round(nominal_N * (1.0 + sigma_rel * rng.standard_normal()))))


# -- ensembles ----------------------------------------------------------------

@dataclass
class EnsembleStats:
    """Across-trajectory statistics of the recorded moments.

    ``mean`` and ``stderr`` hold one array per record key, aligned with
    ``times``.  Failed trajectories are listed in ``failures`` as
    ``(index, message)`` and excluded from the statistics.
    """

    times: np.ndarray
    mean: Dict[str, np.ndarray]
    stderr: Dict[str, np.ndarray]
    atom_numbers: np.ndarray
    final_moments: List[Dict[str, float]]
    failures: List[tuple] = field(default_factory=list)
    results: list = field(default_factory=list, repr=False)

    @property
    def n_ok(self) -> int:
        return len(self.final_moments)


def trajectory_seeds(seed: int, n: int) -> List[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(n)


def _run_one(args):
    from .runner import simulate

    config, noise, index, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    nominal = config.system.atom_number
    if noise.atom_number_sigma_rel > 0 or noise.atom_number_distribution == "poisson":
        n_atoms = sample_atom_number(nominal, noise.atom_number_sigma_rel, rng,
                                     noise.atom_number_distribution)
    else:
        n_atoms = float(nominal)
    try:
        res = simulate(config, atom_number=n_atoms,
                       rng=rng if noise.photon_noise_enabled else None,
                       photon_refresh=noise.photon_refresh)
    except (RotorError, FloatingPointError) as exc:
        return index, n_atoms, None, f"{type(exc).__name__}: {exc}"
    return index, n_atoms, res, None


def run_ensemble(config, noise: Optional[NoiseConfig] = None, workers: int = 1,
                 keep_results: bool = False) -> EnsembleStats:
    """Run independent noisy trajectories of ``config`` and aggregate them.

    ``noise`` defaults to the configuration's own noise section.  Results
    are reduced in trajectory order, so the statistics do not depend on
    ``workers``.
    """
    noise = noise if noise is not None else config.noise_config()
    seeds = trajectory_seeds(noise.seed, noise.n_trajectories)
    jobs = [(config, noise, i, s) for i, s in enumerate(seeds)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_one, jobs))
    else:
        outs = [_run_one(j) for j in jobs]
    outs.sort(key=lambda o: o[0])

    failures = [(i, msg) for i, _, res, msg in outs if res is None]
    good = [(i, n, res) for i, n, res, _ in outs if res is not None]
    atoms = np.array([n for _, n, _, _ in outs])
    if not good:
        return EnsembleStats(times=np.zeros(0), mean={}, stderr={}, atom_numbers=atoms,
                             final_moments=[], failures=failures)
    times = good[0][2].trajectory.times
    keys = list(good[0][2].series().keys())
    mean, stderr = {}, {}
    n_ok = len(good)
    for key in keys:
        rows = [res.series()[key] for _, _, res in good]
        length = min(len(r) for r in rows)
        stack = np.vstack([r[:length] for r in rows])
        mean[key] = stack.mean(axis=0)
        stderr[key] = (stack.std(axis=0, ddof=1) / math.sqrt(n_ok) if n_ok > 1
                       else np.zeros(length))
    return EnsembleStats(
        times=times[:len(next(iter(mean.values())))] if mean else times,
        mean=mean,
        stderr=stderr,
        atom_numbers=atoms,
        final_moments=[res.final_moments() for _, _, res in good],
        failures=failures,
        results=[res for _, _, res in good] if keep_results else [],
    )
