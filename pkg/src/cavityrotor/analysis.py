"""Observables: moments, squeezing, Wigner maps and the cavity g2 signal."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft as sfft

from .errors import LocalizationError, PhotonFloorError
from .grid import RotorState
from .model import DrivePoint, RotorConstants, SystemParams, bare_potential


class SpreadWarning(RuntimeWarning):
    """The state is too wide for line-variable moments to be trusted."""


@dataclass(frozen=True)
class MomentReport:
    mean_theta: float
    var_theta: float
    mean_l: float
    var_l: float
    covar_theta_l: float
    squeeze_angle: float
    min_variance_ratio: float
    omega_ref: float

    @property
    def covar(self) -> float:
        return self.covar_theta_l

    @property
    def uncertainty_product(self) -> float:
        return self.var_theta * self.var_l - self.covar_theta_l**2

    def covariance(self) -> np.ndarray:
        return np.array([[self.var_theta, self.covar_theta_l],
                         [self.covar_theta_l, self.var_l]])

    def scaled_covariance(self, omega: Optional[float] = None) -> np.ndarray:
        """Covariance in zero-point units of a trap with frequency ``omega``.

        The ground state of that trap maps to ``diag(1/2, 1/2)``.
        """
        s = self.omega_ref if omega is None else omega
        return np.array([[s * self.var_theta, self.covar_theta_l],
                         [self.covar_theta_l, self.var_l / s]])


def _centred_angles(state: RotorState):
    grid = state.grid
    w = state.density
    w = w / w.sum()
    theta = grid.theta
    if grid.is_full_circle:
        # branch cut opposite the circular mean
        phase = 2.0 * math.pi / grid.period
        z = np.sum(w * np.exp(1j * phase * theta))
        mu = math.atan2(z.imag, z.real) / phase
        theta = mu + np.mod(theta - mu + grid.period / 2, grid.period) - grid.period / 2
    return theta, w


def squeezing_from_covariance(cov: np.ndarray):
    """Minor-axis variance and its orientation in ``[0, pi)``.

    The angle is measured from the theta axis.
    """
    vals, vecs = np.linalg.eigh(cov)
    v = vecs[:, 0]
    angle = math.atan2(v[1], v[0]) % math.pi
    return float(vals[0]), angle


def moments(state: RotorState, omega_ref: Optional[float] = None, check: bool = True) -> MomentReport:
    """First and second moments of angle and angular momentum.

    ``omega_ref`` is the dimensionless trap frequency that defines the
    zero-point scale for ``squeeze_angle`` and ``min_variance_ratio``; by
    default the state's own ``sqrt(var_l / var_theta)`` is used.
    """
    grid = state.grid
    psi = state.amplitudes
    theta, w = _centred_angles(state)
    mean_theta = float(np.sum(w * theta))
    dth = theta - mean_theta
    var_theta = float(np.sum(w * dth**2))

    phi = sfft.fft(psi)
    p = np.abs(phi) ** 2
    p /= p.sum()
    k = grid.wavenumbers
    mean_l = float(np.sum(p * k))
    var_l = float(np.sum(p * (k - mean_l) ** 2))

    lpsi = sfft.ifft(k * phi) - mean_l * psi
    norm = float(np.sum(np.abs(psi) ** 2))
    covar = float(np.real(np.vdot(psi, dth * lpsi)) / norm)

    if check and math.sqrt(var_theta) > grid.period / 8:
        warnings.warn(
            f"angular spread {math.sqrt(var_theta):.3g} rad is a sizeable fraction of the "
            f"period {grid.period:.3g}; line moments are unreliable", SpreadWarning, stacklevel=2)

    scale = omega_ref if omega_ref is not None else math.sqrt(var_l / var_theta)
    cov = np.array([[scale * var_theta, covar], [covar, var_l / scale]])
    minor, angle = squeezing_from_covariance(cov)
    return MomentReport(
        mean_theta=mean_theta,
        var_theta=var_theta,
        mean_l=mean_l,
        var_l=var_l,
        covar_theta_l=covar,
        squeeze_angle=angle,
        min_variance_ratio=minor / 0.5,
        omega_ref=scale,
    )


def potential_variance(state: RotorState, constants: RotorConstants):
    """``<V^2> - <V>^2`` of the bare potential; returns ``(mean, variance)``."""
    w = state.density
    w = w / w.sum()
    v = bare_potential(state.grid.theta, constants)
    mean = float(np.sum(w * v))
    return mean, float(np.sum(w * (v - mean) ** 2))


# -- Wigner ----------------------------------------------------------------

@dataclass
class WignerMap:
    theta: np.ndarray
    l: np.ndarray
    values: np.ndarray  # shape (len(theta), len(l))

    @property
    def dtheta(self) -> float:
        return float(self.theta[1] - self.theta[0])

    @property
    def dl(self) -> float:
        return float(self.l[1] - self.l[0])

    def integral(self) -> float:
        return float(self.values.sum() * self.dtheta * self.dl)

    def marginal_theta(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dl

    def marginal_l(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dtheta

    def purity(self) -> float:
        return float(2.0 * math.pi * np.sum(self.values**2) * self.dtheta * self.dl)

    def covariance(self) -> np.ndarray:
        w = self.values * self.dtheta * self.dl
        tot = w.sum()
        th = self.theta[:, None]
        ll = self.l[None, :]
        mt = (w * th).sum() / tot
        ml = (w * ll).sum() / tot
        ctt = (w * (th - mt) ** 2).sum() / tot
        cll = (w * (ll - ml) ** 2).sum() / tot
        ctl = (w * (th - mt) * (ll - ml)).sum() / tot
        return np.array([[ctt, ctl], [ctl, cll]])


def _support(state: RotorState, cutoff: float):
    dens = state.density * state.grid.dtheta
    cum = np.cumsum(dens)
    total = cum[-1]
    lo = int(np.searchsorted(cum, cutoff * total))
    hi = int(np.searchsorted(cum, (1.0 - cutoff) * total))
    return lo, hi


def wigner(state, l_grid=None, theta_stride: Optional[int] = None,
           support_cutoff: float = 1e-14, max_rows: int = 512,
           check: bool = True) -> WignerMap:
    """Line Wigner transform ``(1/2pi) int psi*(th + s/2) psi(th - s/2) e^{iLs} ds``.

    Lags are whole grid steps, so ``s = 2 j dtheta``.  With ``l_grid=None``
    the angular-momentum axis is the discrete conjugate of the lag axis,
    which makes the angle marginal exact.  Rows are taken every
    ``theta_stride`` grid points (default: enough to keep ``max_rows`` rows).

    A sequence of states on a common grid gives the Wigner function of
    their equal-weight mixture.
    """
    states = [state] if isinstance(state, RotorState) else list(state)
    if not states:
        raise ValueError("no states given")
    grid = states[0].grid
    if any(s.grid != grid for s in states):
        raise ValueError("mixture members must share a grid")
    if check:
        for s in states:
            theta, w = _centred_angles(s)
            mu = float(np.sum(w * theta))
            outside = float(np.sum(w[np.abs(theta - mu) >= grid.period / 4]))
            if outside > 1e-6:
                raise LocalizationError(
                    f"probability {outside:.3g} outside the central half period; "
                    "the line Wigner transform needs a localized state")
    n = grid.n_points
    bounds = [_support(s, support_cutoff) for s in states]
    lo = min(b[0] for b in bounds)
    hi = max(b[1] for b in bounds)
    width = hi - lo + 1
    # lags reaching across the whole support, padded to an FFT-friendly size
    half = 1 << int(math.ceil(math.log2(max(width // 2 + 2, 2))))
    m = 2 * half
    if theta_stride is None:
        theta_stride = max(1, -(-width // max_rows))
    rows = np.arange(lo, hi + 1, theta_stride)
    j = np.arange(-half, half)
    ip = rows[:, None] + j[None, :]
    im = rows[:, None] - j[None, :]
    ok = (ip >= 0) & (ip < n) & (im >= 0) & (im < n)
    ipc, imc = np.clip(ip, 0, n - 1), np.clip(im, 0, n - 1)
    corr = np.zeros(ip.shape, dtype=complex)
    for s in states:
        psi = s.amplitudes / math.sqrt(s.norm)
        corr += np.where(ok, np.conj(psi[ipc]) * psi[imc], 0.0)
    corr /= len(states)
    dth = grid.dtheta
    if l_grid is None:
        # W(L_q) = (dth/pi) sum_j c_j exp(2 pi i j q / M) with L_q = pi q / (M dth)
        spec = m * sfft.ifft(sfft.ifftshift(corr, axes=1), axis=1)
        vals = (dth / math.pi) * np.real(spec)
        q = sfft.fftfreq(m) * m
        l_axis = math.pi * q / (m * dth)
        order = np.argsort(l_axis)
        l_axis = l_axis[order]
        vals = vals[:, order]
    else:
        l_axis = np.asarray(l_grid, dtype=float)
        phase = np.exp(2j * np.outer(j * dth, l_axis))
        vals = (dth / math.pi) * np.real(corr @ phase)
    return WignerMap(theta=grid.theta[rows].copy(), l=l_axis, values=vals)


# -- cavity output -----------------------------------------------------------

@dataclass
class G2Series:
    times: np.ndarray
    g2_values: np.ndarray
    mean_photon_numbers: np.ndarray

    def amplitude(self, t_start: Optional[float] = None, t_end: Optional[float] = None):
        """Peak-to-peak and zero-to-peak oscillation of g2 inside a window."""
        mask = np.ones_like(self.times, dtype=bool)
        if t_start is not None:
            mask &= self.times >= t_start
        if t_end is not None:
            mask &= self.times <= t_end
        g = self.g2_values[mask]
        ptp = float(g.max() - g.min())
        return {"peak_to_peak": ptp, "zero_to_peak": 0.5 * ptp,
                "max_excess": float(g.max() - 1.0)}


def field_response(mean_V: float, drive: DrivePoint, params: SystemParams):
    """Steady amplitude ``alpha_s`` and linear response ``gamma`` of the cavity field.

    ``gamma = i eta U0 / z**2`` with ``z = kappa/2 + i (delta + U0 <V>)``,
    which is minus ``d alpha_s / d<V>``; only ``gamma**2`` reaches g2, so
    the overall sign is immaterial.
    """
    z = params.kappa / 2.0 + 1j * (drive.delta + params.U0 * mean_V)
    alpha = drive.eta / z
    gamma = 1j * drive.eta * params.U0 / z**2
    return alpha, gamma


def g2_value(mean_V: float, var_V: float, drive: DrivePoint, params: SystemParams,
             photon_floor: float = 1e-6) -> float:
    """Normally ordered intensity correlation to second order in the fluctuation.

    With ``a = alpha + gamma dV``, ``<dV> = 0`` and vacuum input noise,
    ``g2 = 1 + (alpha* gamma + alpha gamma*)^2 <dV^2> / |alpha|^4``.
    """
    alpha, gamma = field_response(mean_V, drive, params)
    n = abs(alpha) ** 2
    if n < photon_floor:
        raise PhotonFloorError(f"mean photon number {n:.3g} below floor {photon_floor:.3g}")
    cross = 2.0 * (np.conj(alpha) * gamma).real
    return 1.0 + cross**2 * var_V / n**2


def g2_series(trajectory, params: SystemParams, photon_floor: float = 1e-6) -> G2Series:
    """g2 at every recorded sample of a trajectory.

    The trajectory must carry ``mean_V``, ``var_V``, ``eta`` and ``delta``
    records (see :class:`cavityrotor.dynamics.Observers`).
    """
    rec = trajectory.records
    g2 = np.empty(len(trajectory.times))
    n = np.empty_like(g2)
    for i in range(len(g2)):
        drive = DrivePoint(float(rec["eta"][i]), float(rec["delta"][i]))
        g2[i] = g2_value(rec["mean_V"][i], rec["var_V"][i], drive, params, photon_floor)
        n[i] = abs(field_response(rec["mean_V"][i], drive, params)[0]) ** 2
    return G2Series(times=np.asarray(trajectory.times), g2_values=g2, mean_photon_numbers=n)
