"""Closed-form homodyne measurement theory.

Time-dependent integrated signal and noise of the collective ``X_-`` output
quadrature, the resulting SNR, long-time measurement rates, loss-corrected
variants, readout fidelity and the time needed to reach a target fidelity.

Everything is vectorised over ``tau`` (or ``t``) with numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize, special

from .errors import DomainError, InstabilityError, NoConvergenceError
from .params import SystemParams

TAU_MAX = 1.0e4


@dataclass(frozen=True)
class DriveConfig:
    """Coherent drive: either intracavity photons ``nbar0`` or input flux ``|beta|``."""

    nbar0: float | None = None
    beta_flux: float | None = None
    sigma: int = 1
    t0: float = 0.0

    def __post_init__(self):
        if (self.nbar0 is None) == (self.beta_flux is None):
            raise DomainError("specify exactly one of nbar0 / beta_flux")
        if self.nbar0 is not None and self.nbar0 < 0:
            raise DomainError(f"nbar0 must be non-negative, got {self.nbar0}")
        if self.sigma not in (1, -1):
            raise DomainError(f"sigma must be +1 or -1, got {self.sigma}")
        if self.t0 != 0.0:
            raise DomainError("the drive start time is fixed to t0 = 0")

    def resolve_nbar0(self, params: SystemParams, kappa_tot: float | None = None) -> float:
        if self.nbar0 is not None:
            return float(self.nbar0)
        return beta_to_n0(params, self.beta_flux, kappa_tot=kappa_tot)


@dataclass(frozen=True)
class SnrResult:
    tau: float | np.ndarray
    signal: float | np.ndarray
    noise: float | np.ndarray
    snr: float | np.ndarray
    rate_longtime: float


@dataclass(frozen=True)
class NoiseKernel:
    """Two-time noise correlator: ``delta_weight * delta(t - t') + smooth``."""

    delta_weight: float
    smooth: float | np.ndarray


def _check_stable(lam: float, kappa: float) -> None:
    if lam >= kappa / 2.0:
        raise InstabilityError(f"lambda={lam} is not below the instability threshold {kappa / 2.0}")


def _sin_over(chi, t):
    # sin(chi t)/chi, exact at chi -> 0
    return t * np.sinc(chi * t / np.pi)


def beta_to_n0(params: SystemParams, beta_flux: float, kappa_tot: float | None = None) -> float:
    """Coherent intracavity photons ``kappa |beta|^2 / ((lam + kappa_tot/2)^2 + chi^2)``."""
    kt = params.kappa if kappa_tot is None else kappa_tot
    _check_stable(params.lam, kt)
    chi = params.chi_eff
    return params.kappa * beta_flux**2 / ((params.lam + kt / 2.0) ** 2 + chi**2)


def n0_to_beta(params: SystemParams, nbar0: float, kappa_tot: float | None = None) -> float:
    kt = params.kappa if kappa_tot is None else kappa_tot
    _check_stable(params.lam, kt)
    chi = params.chi_eff
    return math.sqrt(nbar0 * ((params.lam + kt / 2.0) ** 2 + chi**2) / params.kappa)


def _integrated_signal(tau, chi, lam, kappa, nbar0):
    a = lam + kappa / 2.0
    d2 = a * a + chi * chi
    tau = np.asarray(tau, dtype=float)
    e = np.exp(-a * tau)
    transient = (e * ((chi * chi - a * a) * _sin_over(chi, tau) - 2.0 * a * np.cos(chi * tau)) + 2.0 * a) / d2
    return -2.0 * math.sqrt(2.0 * nbar0) * chi / math.sqrt(d2) * kappa * (tau - transient)


def _integrated_noise(tau, chi, lam, kappa):
    a = lam + kappa / 2.0
    d2 = a * a + chi * chi
    tau = np.asarray(tau, dtype=float)
    e = np.exp(-a * tau)
    c = np.cos(chi * tau)
    osc = (chi * chi - a * a) * (1.0 - c * e) - 2.0 * chi * chi * a * _sin_over(chi, tau) * e
    return 0.5 * (1.0 - 2.0 * kappa * lam / d2) * kappa * tau - kappa**2 * lam / (a * d2**2) * osc


def signal_mean(t, params: SystemParams, drive: DriveConfig):
    """Mean output quadrature ``<X_-,out(t)>`` for qubit eigenvalue ``drive.sigma``."""
    _check_stable(params.lam, params.kappa)
    chi, lam, kappa = params.chi_eff, params.lam, params.kappa
    a = lam + kappa / 2.0
    d2 = a * a + chi * chi
    beta = n0_to_beta(params, drive.resolve_nbar0(params))
    t = np.asarray(t, dtype=float)
    bracket = 1.0 - (np.cos(chi * t) + a * _sin_over(chi, t)) * np.exp(-a * t)
    out = -math.sqrt(2.0) * kappa * chi * beta * drive.sigma / d2 * bracket
    return out if out.ndim else float(out)


def integrated_signal(tau, params: SystemParams, drive: DriveConfig):
    """Integrated measurement signal ``M_S(tau)`` (difference of the two qubit states)."""
    _check_stable(params.lam, params.kappa)
    out = _integrated_signal(tau, params.chi_eff, params.lam, params.kappa, drive.resolve_nbar0(params))
    return out if out.ndim else float(out)


def noise_kernel(t, t_prime, params: SystemParams) -> NoiseKernel:
    """Output noise correlator, with the white vacuum part carried as a delta weight."""
    chi, lam, kappa = params.chi_eff, params.lam, params.kappa
    a = lam + kappa / 2.0
    s = np.abs(np.asarray(t, dtype=float) - np.asarray(t_prime, dtype=float))
    smooth = -kappa * lam / (2.0 * a) * np.cos(chi * s) * np.exp(-a * s)
    return NoiseKernel(delta_weight=0.5, smooth=smooth if smooth.ndim else float(smooth))


def integrated_noise(tau, params: SystemParams):
    """Integrated noise ``M_N(tau)``; independent of the qubit state."""
    _check_stable(params.lam, params.kappa)
    out = _integrated_noise(tau, params.chi_eff, params.lam, params.kappa)
    return out if out.ndim else float(out)


def gamma_istms(params: SystemParams, drive: DriveConfig) -> float:
    """Long-time measurement rate ``8 nbar0 chi^2 kappa / (chi^2 + (kappa/2 - lam)^2)``."""
    _check_stable(params.lam, params.kappa)
    chi, lam, kappa = params.chi_eff, params.lam, params.kappa
    n0 = drive.resolve_nbar0(params)
    if chi == 0:
        return 0.0
    return 8.0 * n0 * chi**2 * kappa / (chi**2 + (kappa / 2.0 - lam) ** 2)


def gamma_standard(chi: float, kappa: float, nbar: float) -> float:
    """Single-cavity dispersive readout rate (optimal and weak-coupling branches)."""
    if chi > kappa / 2.0 * (1 + 1e-12):
        raise DomainError(f"chi={chi} exceeds the optimal coupling kappa/2={kappa / 2.0}")
    if abs(chi - kappa / 2.0) <= 1e-12 * kappa:
        return 4.0 * nbar * kappa
    return 2.0 * nbar * (chi / kappa) ** 2 * kappa


def rate_ratio_weak(params: SystemParams, drive: DriveConfig) -> float:
    """Weak-coupling rate relative to optimal standard readout at equal total photons."""
    chi = params.chi_eff
    if chi == 0:
        raise DomainError("rate ratio undefined for chi = 0")
    n0 = drive.resolve_nbar0(params)
    return n0 / (n0 + params.kappa / (4.0 * chi))


def snr(tau, params: SystemParams, drive: DriveConfig) -> SnrResult:
    """Full time-dependent SNR: ``SNR^2 = M_S^2 / (2 M_N)``."""
    signal = integrated_signal(tau, params, drive)
    noise = integrated_noise(tau, params)
    value = np.sqrt(signal**2 / (2.0 * noise))
    return SnrResult(tau, signal, noise, value, gamma_istms(params, drive))


def gamma_ext(params: SystemParams, drive: DriveConfig, eta: float | None = None) -> float:
    """Long-time rate behind a beam splitter of transmission loss ``eta``."""
    eta = params.eta if eta is None else eta
    _check_stable(params.lam, params.kappa)
    chi, lam, kappa = params.chi_eff, params.lam, params.kappa
    n0 = drive.resolve_nbar0(params)
    b = chi**2 + (lam - kappa / 2.0) ** 2
    d2 = chi**2 + (lam + kappa / 2.0) ** 2
    return (1.0 - eta) * 8.0 * n0 * chi**2 * kappa / ((1.0 - eta) * b + eta * d2)


def snr_ext(tau, params: SystemParams, drive: DriveConfig, eta: float | None = None) -> SnrResult:
    """SNR with external loss: the vacuum admixed by the loss adds ``eta kappa tau / 2``."""
    eta = params.eta if eta is None else eta
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    signal = integrated_signal(tau, params, drive)
    noise = integrated_noise(tau, params)
    vacuum = eta * params.kappa * np.asarray(tau, dtype=float) / 2.0
    value = np.sqrt((1.0 - eta) * signal**2 / (2.0 * ((1.0 - eta) * noise + vacuum)))
    return SnrResult(tau, math.sqrt(1.0 - eta) * signal, (1.0 - eta) * noise + vacuum, value,
                     gamma_ext(params, drive, eta))


def _int_loss_setup(params: SystemParams, epsilon: float | None):
    eps = params.epsilon if epsilon is None else epsilon
    if not 0.0 <= eps < 1.0:
        raise DomainError(f"epsilon must lie in [0, 1), got {eps}")
    kappa_tot = params.kappa / (1.0 - eps)
    _check_stable(params.lam, kappa_tot)
    return eps, kappa_tot


def gamma_int(params: SystemParams, drive: DriveConfig, epsilon: float | None = None) -> float:
    """Long-time rate with internal loss fraction ``epsilon`` (``kappa_tot = kappa/(1-epsilon)``)."""
    eps, kt = _int_loss_setup(params, epsilon)
    chi, lam = params.chi_eff, params.lam
    n0 = drive.resolve_nbar0(params, kappa_tot=kt)
    b = chi**2 + (lam - kt / 2.0) ** 2
    d2 = chi**2 + (lam + kt / 2.0) ** 2
    return (1.0 - eps) ** 2 * 8.0 * n0 * chi**2 * kt / ((1.0 - eps) * b + eps * d2)


def snr_int(tau, params: SystemParams, drive: DriveConfig, epsilon: float | None = None) -> SnrResult:
    """SNR with internal cavity loss; signal and noise use ``kappa_tot`` throughout."""
    eps, kt = _int_loss_setup(params, epsilon)
    chi, lam = params.chi_eff, params.lam
    n0 = drive.resolve_nbar0(params, kappa_tot=kt)
    signal = _integrated_signal(tau, chi, lam, kt, n0)
    noise = _integrated_noise(tau, chi, lam, kt)
    vacuum = eps * kt * np.asarray(tau, dtype=float) / 2.0
    value = np.sqrt((1.0 - eps) ** 2 * signal**2 / (2.0 * ((1.0 - eps) * noise + vacuum)))
    if value.ndim == 0:
        signal, noise, value = float(signal), float(noise), float(value)
    return SnrResult(tau, (1.0 - eps) * signal, (1.0 - eps) * noise + vacuum, value,
                     gamma_int(params, drive, eps))


def fidelity_from_snr(snr_value):
    return 1.0 - special.erfc(np.asarray(snr_value, dtype=float) / 2.0) / 2.0


def snr_for_fidelity(fidelity: float) -> float:
    """Inverse of :func:`fidelity_from_snr`."""
    if not 0.5 <= fidelity < 1.0:
        raise DomainError(f"fidelity must lie in [0.5, 1), got {fidelity}")
    x = float(special.erfcinv(2.0 * (1.0 - fidelity)))
    # one Newton polish on erfc(x) = 2(1 - F)
    target = 2.0 * (1.0 - fidelity)
    x -= (special.erfc(x) - target) / (-2.0 / math.sqrt(math.pi) * math.exp(-x * x))
    return 2.0 * x


def _snr_value(snr_fn, tau, params, drive):
    out = snr_fn(tau, params, drive)
    return out.snr if isinstance(out, SnrResult) else out


def tau_star(params: SystemParams, drive: DriveConfig, F_target: float = 0.9999,
             snr_fn: Callable | None = None, tau_max: float = TAU_MAX, samples: int = 1000) -> float:
    """Shortest integration time whose readout fidelity reaches ``F_target``.

    The SNR curve is scanned left to right on ``samples`` points of a bracket
    set by the long-time rate, and the first crossing is refined by Brent's
    method. Damped oscillations in the SNR therefore cannot hide an earlier
    crossing coarser than one grid step.
    """
    if not 0.5 < F_target < 1.0:
        raise DomainError(f"F_target must lie in (0.5, 1), got {F_target}")
    snr_fn = snr_fn or snr
    if params.chi_eff <= 0:
        raise DomainError("tau_star needs chi > 0")
    if (drive.nbar0 if drive.nbar0 is not None else drive.beta_flux) <= 0:
        raise DomainError("tau_star needs a nonzero drive")
    target = snr_for_fidelity(F_target)
    kappa = params.kappa
    t_max = tau_max / kappa

    def f(t):
        return float(_snr_value(snr_fn, t, params, drive)) - target

    if f(t_max) < 0:
        raise NoConvergenceError(f"SNR at tau_max={t_max:g} stays below the target {target:.6g}")
    t_ref = min(1.0e3 / kappa, t_max)
    rate = float(_snr_value(snr_fn, t_ref, params, drive)) ** 2 / t_ref
    t_hi = min(t_max, 10.0 * target**2 / rate) if rate > 0 else t_max
    while f(t_hi) < 0:
        t_hi = min(2.0 * t_hi, t_max)
    grid = np.linspace(0.0, t_hi, samples + 1)[1:]
    values = np.asarray(_snr_value(snr_fn, grid, params, drive), dtype=float) - target
    first = int(np.argmax(values >= 0))
    lo = 0.0 if first == 0 else grid[first - 1]
    hi = grid[first]
    if lo == 0.0:
        lo = hi * 1e-9
        if f(lo) >= 0:
            return lo
    return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-12)


def tau_star_standard_optimal(nbar: float, kappa: float = 1.0, F_target: float = 0.9999,
                              model: str = "two_mode") -> float:
    """Reference readout with optimal coupling ``chi = kappa/2`` and no squeezing.

    ``two_mode`` uses the full time-dependent SNR of this apparatus with
    ``lam = 0``; ``single_mode`` uses the long-time single-cavity rate
    ``4 nbar kappa``.
    """
    if model == "two_mode":
        params = SystemParams(kappa=kappa, chi=kappa / 2.0)
        return tau_star(params, DriveConfig(nbar0=nbar), F_target)
    if model == "single_mode":
        return snr_for_fidelity(F_target) ** 2 / gamma_standard(kappa / 2.0, kappa, nbar)
    raise DomainError(f"unknown comparator model {model!r}")


def intracavity_variance(params: SystemParams) -> float:
    """Steady-state variance of the squeezed intracavity quadrature (vacuum = 1/2)."""
    _check_stable(params.lam, params.kappa)
    return params.kappa / (4.0 * (params.lam + params.kappa / 2.0))
