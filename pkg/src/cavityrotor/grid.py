"""Angular grid and the wavefunction container."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import ParameterError


@dataclass(frozen=True)
class AngularGrid:
    """Uniform periodic grid on ``[center - period/2, center + period/2)``.

    A period of pi covers the full rotor.  Smaller periods act as a
    computational window around ``center`` and are only meaningful for
    states that vanish near the window edges.
    """

    n_points: int = 1024
    period: float = math.pi
    center: float = 0.0
    theta: np.ndarray = field(init=False, repr=False, compare=False)
    wavenumbers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_points
        if n < 4 or n & (n - 1):
            raise ParameterError(f"n_points must be a power of two >= 4, got {n}")
        if not self.period > 0:
            raise ParameterError("period must be positive")
        d = self.period / n
        theta = self.center + (np.arange(n) - n // 2) * d
        k = sfft.fftfreq(n, d=d) * 2.0 * math.pi
        theta.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "wavenumbers", k)

    @property
    def dtheta(self) -> float:
        return self.period / self.n_points

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def kinetic(self) -> np.ndarray:
        """Free-rotor eigenvalues ``k**2 / 2`` in FFT order."""
        return 0.5 * self.wavenumbers**2

    @property
    def max_kinetic(self) -> float:
        return float(self.kinetic.max())

    @property
    def is_full_circle(self) -> bool:
        return self.period >= math.pi * (1 - 1e-12)


@dataclass(frozen=True)
class RotorState:
    """Wavefunction samples on an :class:`AngularGrid`.

    ``time`` is dimensionless (units of ``t0``).  Normalization is
    ``sum |psi|^2 dtheta = 1``.
    """

    amplitudes: np.ndarray
    grid: AngularGrid
    time: float = 0.0

    def __post_init__(self):
        psi = np.asarray(self.amplitudes, dtype=complex)
        if psi.shape != (self.grid.n_points,):
            raise ParameterError("amplitude array does not match the grid")
        object.__setattr__(self, "amplitudes", psi)

    @classmethod
    def from_function(cls, func, grid: AngularGrid, time: float = 0.0) -> "RotorState":
        return cls(np.asarray(func(grid.theta), dtype=complex), grid, time).normalized()

    @classmethod
    def gaussian(cls, grid: AngularGrid, width: float, center: float = 0.0,
                 momentum: float = 0.0) -> "RotorState":
        """Minimum-uncertainty packet with ``Var theta = width**2``."""
        x = grid.theta - center
        psi = np.exp(-x**2 / (4.0 * width**2) + 1j * momentum * x)
        return cls(psi, grid).normalized()

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dtheta)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def normalized(self) -> "RotorState":
        return RotorState(self.amplitudes / math.sqrt(self.norm), self.grid, self.time)

    def with_amplitudes(self, psi, time=None) -> "RotorState":
        return RotorState(psi, self.grid, self.time if time is None else time)

    def overlap(self, other: "RotorState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes) * self.grid.dtheta)

    def fidelity(self, other: "RotorState") -> float:
        """Modulus of the overlap, ``|<self|other>|``."""
        return abs(self.overlap(other))

    def momentum_amplitudes(self) -> np.ndarray:
        return sfft.fft(self.amplitudes)
