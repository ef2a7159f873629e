"""Driving-dependent quantities of the dissipative dynamics.

For a time-dependent trap frequency omega(t) the bath sees the modified
frequency alpha = omega sqrt(1 - mu^2/4), where mu = (d omega/dt)/omega^2
is the adiabatic parameter.  The up/down jump rates are fixed by alpha,
the temperature and the coupling prefactor, and obey detailed balance
k_down = k_up e^(alpha/T) exactly.  The module also provides the
slow-acceleration diagnostics: the inertial parameter Upsilon and the
induced lower bound on the protocol duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .states import BathParams

__all__ = [
    "RatePair",
    "InertialReport",
    "bose_occupation",
    "adiabatic_parameter",
    "modified_frequency",
    "decay_rates",
    "inertial_parameter",
    "min_protocol_duration",
    "inertial_report",
    "thermal_energy",
    "isothermal_work",
]


@dataclass(frozen=True)
class RatePair:
    """Downward and upward jump rates; k_down > k_up > 0 at positive T."""

    k_down: float
    k_up: float


@dataclass(frozen=True)
class InertialReport:
    """Slow-driving diagnostics of a protocol.

    upsilon_max: largest |Upsilon| on the grid.
    t_f_min: duration bound at precision scalar f (0 for undriven profiles).
    """

    upsilon_max: float
    t_f_min: float
    f: float


def bose_occupation(energy: float, T: float):
    """Mean thermal occupation 1/(e^(energy/T) - 1)."""
    return 1.0 / np.expm1(np.asarray(energy, dtype=float) / T)


def adiabatic_parameter(omega: float, omega_dot: float):
    """mu = omega_dot / omega^2."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    return omega_dot / omega**2


def modified_frequency(omega: float, mu: float):
    """alpha = omega sqrt(1 - mu^2/4); requires |mu| < 2."""
    omega = np.asarray(omega, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(np.abs(mu) >= 2):
        raise ValueError("|mu| must be < 2")
    return omega * np.sqrt(1.0 - mu**2 / 4.0)


def decay_rates(alpha: float, bath: BathParams) -> RatePair:
    """Jump rates k_down = g alpha (1 + N(alpha)), k_up = g alpha N(alpha)."""
    if alpha <= 0:
        raise ValueError(f"modified frequency must be positive, got {alpha}")
    k_down, k_up = _rate_arrays(alpha, bath)
    return RatePair(float(k_down), float(k_up))


def _rate_arrays(alpha, bath: BathParams):
    alpha = np.asarray(alpha, dtype=float)
    n = bose_occupation(alpha, bath.T)
    return bath.g * alpha * (1.0 + n), bath.g * alpha * n


def inertial_parameter(omega: float, omega_dot: float, omega_ddot: float):
    """Upsilon = (omega_ddot/omega^3 - 2 mu^2) / (2 kappa)^2 with kappa^2 = 4 - mu^2."""
    omega = np.asarray(omega, dtype=float)
    mu = adiabatic_parameter(omega, omega_dot)
    if np.any(np.abs(mu) >= 2):
        raise ValueError("|mu| must be < 2")
    kappa2 = 4.0 - mu**2
    return (omega_ddot / omega**3 - 2.0 * mu**2) / (4.0 * kappa2)


def min_protocol_duration(
    omega_profile: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    f: float,
    n: int = 2001,
    t_f: float | None = None,
) -> float:
    """Lower duration bound (1/f) max_s (1/omega) sqrt(omega''(s) / (2 omega (8 - mu^2))).

    omega_profile is either a callable on s in [0, 1] or an array of
    uniform samples.  Points with a negative radicand are skipped; a
    profile with no admissible point (e.g. constant omega) returns 0.
    When t_f is given, mu is evaluated from the profile at that duration,
    otherwise mu = 0 is used (the correction is O(mu^2/8)).
    """
    if not 0 < f < 1:
        raise ValueError(f"precision scalar f must be in (0, 1), got {f}")
    if callable(omega_profile):
        s = np.linspace(0.0, 1.0, n)
        omega = np.asarray(omega_profile(s), dtype=float)
    else:
        omega = np.asarray(omega_profile, dtype=float)
        s = np.linspace(0.0, 1.0, omega.size)
    if omega.size < 5:
        raise ValueError("profile must have at least 5 samples")
    if np.any(omega <= 0):
        raise ValueError("omega must be positive on the whole profile")
    ds = s[1] - s[0]
    d1 = np.gradient(omega, ds, edge_order=2)
    d2 = np.gradient(d1, ds, edge_order=2)
    if t_f is not None:
        mu = d1 / (t_f * omega**2)
    else:
        mu = np.zeros_like(omega)
    radicand = d2 / (2.0 * omega) / (8.0 - mu**2)
    ok = radicand > 0
    if not ok.any():
        return 0.0
    maximand = np.sqrt(radicand[ok]) / omega[ok]
    return float(maximand.max() / f)


def inertial_report(t: np.ndarray, omega: np.ndarray, f: float = 0.05) -> InertialReport:
    """Diagnostics of a sampled protocol omega(t) on a uniform grid."""
    t = np.asarray(t, dtype=float)
    omega = np.asarray(omega, dtype=float)
    dt = t[1] - t[0]
    d1 = np.gradient(omega, dt, edge_order=2)
    d2 = np.gradient(d1, dt, edge_order=2)
    ups = inertial_parameter(omega, d1, d2)
    t_f = float(t[-1] - t[0])
    bound = min_protocol_duration(omega, f, t_f=t_f if t_f > 0 else None)
    return InertialReport(upsilon_max=float(np.max(np.abs(ups))), t_f_min=bound, f=f)


def thermal_energy(omega: float, T: float):
    """Mean energy (omega/2) coth(omega/(2T)) of a thermal oscillator."""
    omega = np.asarray(omega, dtype=float)
    return omega / 2.0 / np.tanh(omega / (2.0 * T))


def isothermal_work(omega_i: float, omega_f: float, T: float) -> float:
    """Free-energy difference T ln[sinh(omega_f/2T)/sinh(omega_i/2T)].

    Equals the work of a quasi-static frequency sweep in contact with the
    bath; the reference value for protocol efficiencies.
    """
    return T * (
        math.log(math.sinh(omega_f / (2.0 * T))) - math.log(math.sinh(omega_i / (2.0 * T)))
    )
