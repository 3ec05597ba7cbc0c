"""Exact diagonalization of the spin-1 collisional Hamiltonian at small N.

``H = (c2 / N) F^2 - q n0`` acts on bosonic Fock states ``(n+, n0, n-)``.
The magnetization ``n+ - n-`` is conserved, so each sector is diagonalized
on its own.  The low-lying spectrum is compared against the discretized
rotor ``a l^2 + q V(theta)`` for the two kinetic prefactors ``a = c2 / N``
and ``a = c2 / (2 N)`` and for several symmetry sectors of the rotor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .dynamics import stationary_states
from .errors import ParameterError
from .grid import AngularGrid

MAX_DIM = 5000

CONVENTIONS = {
    "F2_over_N": 1.0,       # a = c2 / N
    "L2_over_2N": 0.5,      # a = c2 / (2 N)
}
SECTORS = ("all_m", "even_m", "all_m_even_parity", "even_m_even_parity")


@dataclass(frozen=True)
class FockBasis:
    """Occupations ``(n+, n0, n-)`` with ``n+ + n0 + n- = N``.

    ``lz=None`` spans every magnetization sector.
    """

    N: int
    lz: Optional[int] = 0
    states: Tuple[Tuple[int, int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1 or int(self.N) != self.N:
            raise ParameterError(f"N must be a positive integer, got {self.N}")
        n = int(self.N)
        states = []
        for p in range(n + 1):
            for m in range(n - p + 1):
                if self.lz is None or p - m == self.lz:
                    states.append((p, n - p - m, m))
        object.__setattr__(self, "states", tuple(states))

    @property
    def dimension(self) -> int:
        return len(self.states)

    def index(self) -> Dict[Tuple[int, int, int], int]:
        return {s: i for i, s in enumerate(self.states)}

    def occupations(self) -> np.ndarray:
        return np.array(self.states, dtype=float).reshape(-1, 3)


def sector_dimension(N: int, lz: int = 0) -> int:
    """Closed form for the sector size: ``floor((N - |lz|) / 2) + 1``."""
    if abs(lz) > N:
        return 0
    return (N - abs(lz)) // 2 + 1


def raising_operator(source: FockBasis, target: FockBasis) -> sp.csr_matrix:
    """``F+ = sqrt(2) (b+^dag b0 + b0^dag b-)`` from ``source`` into ``target``."""
    idx = target.index()
    rows, cols, vals = [], [], []
    for j, (p, z, m) in enumerate(source.states):
        if z > 0:
            i = idx.get((p + 1, z - 1, m))
            if i is not None:
                rows.append(i)
                cols.append(j)
                vals.append(math.sqrt(2.0 * (p + 1) * z))
        if m > 0:
            i = idx.get((p, z + 1, m - 1))
            if i is not None:
                rows.append(i)
                cols.append(j)
                vals.append(math.sqrt(2.0 * (z + 1) * m))
    return sp.csr_matrix((vals, (rows, cols)), shape=(target.dimension, source.dimension))


def spin_squared(basis: FockBasis) -> np.ndarray:
    """Dense ``F^2 = Fz^2 + (F+ F- + F- F+) / 2`` on ``basis``."""
    occ = basis.occupations()
    fz = occ[:, 0] - occ[:, 2]
    if basis.lz is None:
        up = raising_operator(basis, basis)
        f2 = sp.diags(fz**2) + 0.5 * (up @ up.T + up.T @ up)
    else:
        below = FockBasis(basis.N, basis.lz - 1)
        above = FockBasis(basis.N, basis.lz + 1)
        into = raising_operator(below, basis)      # F+: lz-1 -> lz
        out = raising_operator(basis, above)       # F+: lz -> lz+1
        f2 = sp.diags(fz**2) + 0.5 * (into @ into.T + out.T @ out)
    return np.asarray(f2.todense())


def build_hamiltonian(basis: FockBasis, c2: float, q: float, max_dim: int = MAX_DIM) -> np.ndarray:
    """Matrix of ``(c2 / N) F^2 - q n0`` in ``basis``."""
    if basis.dimension > max_dim:
        raise ParameterError(f"basis dimension {basis.dimension} exceeds the cap {max_dim}")
    h = (c2 / basis.N) * spin_squared(basis)
    h[np.diag_indices_from(h)] -= q * basis.occupations()[:, 1]
    return h


def magnetization(basis: FockBasis) -> np.ndarray:
    occ = basis.occupations()
    return np.diag(occ[:, 0] - occ[:, 2])


def exact_spectrum(N: int, c2: float, q: float, lz: int = 0, max_dim: int = MAX_DIM) -> np.ndarray:
    """Ascending eigenvalues of the collisional Hamiltonian in one sector."""
    h = build_hamiltonian(FockBasis(N, lz), c2, q, max_dim)
    return np.linalg.eigvalsh(h)


def total_spin_levels(N: int, c2: float, lz: int = 0) -> np.ndarray:
    """q = 0 levels ``(c2/N) F (F+1)`` for ``F = N, N-2, ... >= |lz|``, ascending."""
    f = np.arange(N, abs(lz) - 1, -2, dtype=float)
    return np.sort(c2 / N * f * (f + 1.0))


# -- comparison with the rotor ----------------------------------------------

@dataclass
class SpectrumComparison:
    """Low-lying excitation gaps of the exact and rotor spectra for one N.

    ``rotor_levels`` and ``relative_deviations`` are keyed by
    ``(convention, sector)``; gaps are measured from each spectrum's ground
    level and paired in ascending order.
    """

    N: int
    exact_levels: np.ndarray
    rotor_levels: Dict[Tuple[str, str], np.ndarray]
    pairing: np.ndarray
    relative_deviations: Dict[Tuple[str, str], np.ndarray]

    def mean_abs_deviation(self, key) -> float:
        return float(np.nanmean(np.abs(self.relative_deviations[key])))

    @property
    def best(self) -> Tuple[str, str]:
        return min(self.relative_deviations, key=self.mean_abs_deviation)

    def gap_ratio(self, key) -> float:
        """First exact excitation gap over the first rotor gap."""
        e, r = self.exact_levels, self.rotor_levels[key]
        return float((e[1] - e[0]) / (r[1] - r[0]))


def rotor_levels(N: int, c2: float, q: float, convention: str, sector: str, k: int,
                 n_points: int = 512) -> np.ndarray:
    """Lowest ``k`` levels of ``a l^2 + q V(theta)`` on the discretized circle.

    Sectors starting with ``even_m`` keep wavefunctions of period pi (even
    angular momenta), ``all_m`` allows period 2 pi.  The ``_even_parity``
    variants keep only states with ``psi(-theta) = psi(theta)``, the image
    of the symmetric ``+ <-> -`` exchange of the zero-magnetization sector.
    """
    if convention not in CONVENTIONS or sector not in SECTORS:
        raise ParameterError(f"unknown convention/sector {convention!r}/{sector!r}")
    a = CONVENTIONS[convention] * c2 / N
    period = math.pi if sector.startswith("even_m") else 2.0 * math.pi
    grid = AngularGrid(n_points, period=period)
    chi1 = N + 1.5
    chi2 = q * N / (8.0 * c2)
    v = chi1 * np.sin(grid.theta) ** 2 + chi2 * np.sin(2.0 * grid.theta) ** 2
    parity = sector.endswith("even_parity")
    n_eig = min(2 * k + 4 if parity else k, n_points // 4)
    # a l^2 + q V = 2a (l^2 / 2 + (q / 2a) V)
    pairs = stationary_states(grid, v, n_eig, beta=q / (2.0 * a))
    levels = []
    for e, state in pairs:
        if parity:
            psi = state.amplitudes
            mirror = np.roll(psi[::-1], 1)  # theta_j -> -theta_j
            if np.vdot(psi, mirror).real <= 0.5 * np.vdot(psi, psi).real:
                continue
        levels.append(2.0 * a * e)
    return np.array(levels[:k])


def compare_with_rotor(N_list: Sequence[int], c2: float, q: float, n_levels: int = 6,
                       n_points: int = 512) -> List[SpectrumComparison]:
    out = []
    for N in N_list:
        exact = exact_spectrum(N, c2, q)
        k = min(n_levels, len(exact))
        exact = exact[:k]
        gaps_exact = exact[1:] - exact[0]
        rot, dev = {}, {}
        for conv in CONVENTIONS:
            for sector in SECTORS:
                levels = rotor_levels(N, c2, q, conv, sector, k, n_points)
                rot[(conv, sector)] = levels
                gaps = levels[1:] - levels[0]
                if len(gaps) < len(gaps_exact):
                    gaps = np.pad(gaps, (0, len(gaps_exact) - len(gaps)), constant_values=np.nan)
                with np.errstate(divide="ignore", invalid="ignore"):
                    dev[(conv, sector)] = (gaps - gaps_exact) / gaps_exact
        out.append(SpectrumComparison(
            N=N, exact_levels=exact, rotor_levels=rot,
            pairing=np.arange(k), relative_deviations=dev))
    return out
