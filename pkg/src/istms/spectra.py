"""Frequency-domain quantities and Purcell-suppression rates.

Frequencies are in the rotating frame where the qubit sits at ``omega = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InstabilityError
from .params import SystemParams

SPECTRUM_KINDS = ("squeezing", "squeezing_db", "dos_right", "dos_left")


@dataclass(frozen=True)
class Spectrum:
    omega_grid: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in SPECTRUM_KINDS:
            raise DomainError(f"unknown spectrum kind {self.kind!r}")
        if len(self.omega_grid) != len(self.values):
            raise DomainError("omega grid and values differ in length")
        if np.any(np.diff(self.omega_grid) <= 0):
            raise DomainError("omega grid must be strictly increasing")


@dataclass(frozen=True)
class MixingCoefficients:
    """Qubit admixture in the dressed cavity lowering operators."""

    sigma_minus_even: float
    sigma_minus_odd: float
    sigma_plus: float
    sigma_minus_right: float
    sigma_plus_right: float
    sigma_minus_left: float
    sigma_plus_left: float


def squeezing_spectrum(omega, params: SystemParams):
    """Output noise spectrum of ``X_-,out``: vacuum minus two Lorentzians at ``+-chi``."""
    lam, kappa, chi = params.lam, params.kappa, params.chi_eff
    if lam >= kappa / 2.0:
        raise InstabilityError(f"lambda={lam} is not below the instability threshold {kappa / 2.0}")
    a = lam + kappa / 2.0
    omega = np.asarray(omega, dtype=float)
    lorentz = a / (a * a + (omega + chi) ** 2) + a / (a * a + (omega - chi) ** 2)
    out = 0.5 * (1.0 - kappa * lam / a * lorentz)
    return out if out.ndim else float(out)


def spectrum_db(omega, params: SystemParams):
    """Squeezing relative to vacuum, ``10 log10(2 S_out)``."""
    s = np.asarray(squeezing_spectrum(omega, params))
    if np.any(s <= 0):
        raise DomainError("squeezing spectrum is not positive; cannot express in dB")
    out = 10.0 * np.log10(2.0 * s)
    return out if out.ndim else float(out)


def susceptibility(omega, params: SystemParams) -> np.ndarray:
    """Cavity susceptibility matrix in the (right, left) basis at ``lam = 0``.

    Returns an array of shape ``omega.shape + (2, 2)``.
    """
    J, kappa = params.J, params.kappa
    w = np.asarray(omega, dtype=float)
    iw = 1j * w
    den = iw * (iw + kappa) + J * J
    if np.any(np.abs(den) < 1e-14):
        raise DomainError("susceptibility is singular at the requested frequency")
    out = np.empty(w.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = iw / den
    out[..., 0, 1] = -1j * J / den
    out[..., 1, 0] = -1j * J / den
    out[..., 1, 1] = (iw + kappa) / den
    return out


def _dos_den(w, J, kappa):
    return kappa**2 * w**2 + (J**2 - w**2) ** 2


def dos_right(omega, params: SystemParams):
    w = np.asarray(omega, dtype=float)
    out = 2.0 * params.kappa * w**2 / _dos_den(w, params.J, params.kappa)
    return out if out.ndim else float(out)


def dos_left(omega, params: SystemParams):
    w = np.asarray(omega, dtype=float)
    out = 2.0 * params.kappa * params.J**2 / _dos_den(w, params.J, params.kappa)
    return out if out.ndim else float(out)


def mixing_coefficients(params: SystemParams) -> MixingCoefficients:
    """Leading-order dressing of the normal-mode and cavity lowering operators.

    The right/left combinations are formed from the normal-mode coefficients,
    so the cancellation of ``sigma_minus`` in the right cavity is computed,
    not assumed.
    """
    g, J, lam = params.g, params.J, params.lam
    if J == 0:
        raise DomainError("mixing coefficients undefined for J = 0")
    damp = 1.0 / (1.0 + (lam / J) ** 2)
    base = g / (math.sqrt(2.0) * J) * damp
    minus_even = -base
    minus_odd = base
    plus = base * lam / J
    root2 = math.sqrt(2.0)
    return MixingCoefficients(
        sigma_minus_even=minus_even,
        sigma_minus_odd=minus_odd,
        sigma_plus=plus,
        sigma_minus_right=(minus_even + minus_odd) / root2,
        sigma_plus_right=(plus + plus) / root2,
        sigma_minus_left=(minus_even - minus_odd) / root2,
        sigma_plus_left=(plus - plus) / root2,
    )


def heating_rate(params: SystemParams) -> float:
    """Qubit heating through the output line, ``kappa (g lam / J^2)^2``."""
    return params.kappa * (params.g * params.lam / params.J**2) ** 2


def purcell_left_rate(params: SystemParams) -> float:
    """Purcell decay through internal loss of the pumped (left) cavity."""
    return params.kappa_left_int * (params.g / params.J) ** 2


def purcell_standard_rate(params: SystemParams) -> float:
    """Unfiltered Purcell decay scale ``kappa (g/J)^2`` for comparison."""
    return params.kappa * (params.g / params.J) ** 2


def squeezing_curve(params: SystemParams, omega_grid=None, db: bool = False) -> Spectrum:
    if omega_grid is None:
        omega_grid = np.linspace(-10.0, 10.0, 2001) * params.kappa
    omega_grid = np.asarray(omega_grid, dtype=float)
    if db:
        return Spectrum(omega_grid, np.asarray(spectrum_db(omega_grid, params)), "squeezing_db")
    return Spectrum(omega_grid, np.asarray(squeezing_spectrum(omega_grid, params)), "squeezing")


def dos_curves(params: SystemParams, omega_grid=None) -> tuple[Spectrum, Spectrum]:
    if omega_grid is None:
        omega_grid = np.linspace(-2.0, 2.0, 4001) * params.J
    omega_grid = np.asarray(omega_grid, dtype=float)
    return (Spectrum(omega_grid, np.asarray(dos_right(omega_grid, params)), "dos_right"),
            Spectrum(omega_grid, np.asarray(dos_left(omega_grid, params)), "dos_left"))
