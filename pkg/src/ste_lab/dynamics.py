"""Time evolution and thermodynamic bookkeeping under a driving protocol.

Smoothly driven protocols are integrated through the coefficient equations

    d beta / dt  = k_down (e^beta - 1) + k_up (e^-beta - 1 + 4 e^beta |gamma|^2)
    d gamma / dt = (k_down + k_up) gamma - 2 k_down gamma e^-beta

with the rates sampled along the drive.  A sudden quench is propagated
exactly through the (H, L, C) moment map: an instantaneous frequency jump
followed by the closed-form relaxation propagator at fixed frequency.
Every trajectory carries cumulative work, heat, entropy and the fidelity
to the target thermal state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rates import _rate_arrays, isothermal_work, thermal_energy
from .states import (
    BathParams,
    GeneralizedGibbsState,
    MomentVector,
    SystemParams,
    _covariance_arrays,
    _entropy_from_nu,
    _fidelity_arrays,
)
from .synthesis import Protocol, ProtocolKind

__all__ = [
    "IntegrationError",
    "Trajectory",
    "EntropyBalance",
    "evolve_beta_gamma",
    "quench_sudden",
    "quench_relax",
    "quench_trajectory",
    "adiabatic_trajectory",
    "simulate",
    "work",
    "heat",
    "entropy_balance",
    "efficiency",
    "fit_decay_rate",
    "direction_of",
    "adiabatic_work",
]

# Relaxation propagator conventions: the coherence sector rotates at
# QUENCH_ROTATION_FACTOR * omega_f and every sector decays at
# QUENCH_DECAY_FACTOR * (k_down - k_up).  Kept as module constants so the
# sensitivity of downstream results to either convention can be probed.
QUENCH_ROTATION_FACTOR = 1.0
QUENCH_DECAY_FACTOR = 1.0


class IntegrationError(RuntimeError):
    """Raised when a trajectory leaves the physical domain; carries the time."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


@dataclass
class Trajectory:
    """Sampled state and observables along one protocol realization."""

    kind: ProtocolKind
    t: np.ndarray
    omega: np.ndarray
    sigma_qq: np.ndarray
    sigma_pp: np.ndarray
    sigma_pq: np.ndarray
    energy: np.ndarray
    work: np.ndarray
    heat: np.ndarray
    entropy: np.ndarray
    fidelity_to_target: np.ndarray
    system: SystemParams
    bath: BathParams
    beta: np.ndarray | None = None
    gamma: np.ndarray | None = None

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelity_to_target[-1])


@dataclass(frozen=True)
class EntropyBalance:
    """Entropy change of system, bath (-Q/T) and their sum."""

    dS_sys: float
    dS_bath: float
    dS_total: float


def _midpoint_samples(values):
    """Cubic interpolation of uniform samples at interval midpoints.

    Third-order Lagrange stencils keep the interpolation error at the
    integrator's own order.
    """
    v = np.asarray(values, dtype=float)
    mid = np.empty(v.size - 1)
    mid[1:-1] = (-v[:-3] + 9 * v[1:-2] + 9 * v[2:-1] - v[3:]) / 16.0
    mid[0] = (5 * v[0] + 15 * v[1] - 5 * v[2] + v[3]) / 16.0
    mid[-1] = (v[-4] - 5 * v[-3] + 15 * v[-2] + 5 * v[-1]) / 16.0
    return mid


def _coefficient_rhs(beta, gamma, kd, ku):
    g2 = (gamma * np.conj(gamma)).real
    dbeta = kd * math.expm1(beta) + ku * (math.expm1(-beta) + 4.0 * math.exp(beta) * g2)
    dgamma = (kd + ku) * gamma - 2.0 * kd * gamma * math.exp(-beta)
    return dbeta, dgamma


def evolve_beta_gamma(
    protocol: Protocol, initial: GeneralizedGibbsState | None = None
) -> Trajectory:
    """Integrate the coefficient equations along a sampled protocol.

    Classic fourth-order Runge-Kutta on the protocol grid; rates at the
    half-steps come from :func:`_midpoint_samples`.  The initial (beta,
    gamma) default to the thermal state at the protocol's starting
    frequency.  A state leaving the normalizable domain aborts with the
    offending time.
    """
    if initial is None:
        # physical initial condition: thermal state of the starting trap
        initial = GeneralizedGibbsState(
            beta=-protocol.system.omega_i / protocol.bath.T,
            omega=protocol.system.omega_i,
        )
    t = protocol.t
    n = t.size
    h = t[1] - t[0]
    kd, ku = protocol.k_down, protocol.k_up
    kd_mid = _midpoint_samples(kd)
    ku_mid = _midpoint_samples(ku)

    beta = np.empty(n)
    gamma = np.empty(n, dtype=complex)
    beta[0] = initial.beta
    gamma[0] = initial.gamma
    b, g = initial.beta, complex(initial.gamma)
    for i in range(n - 1):
        db1, dg1 = _coefficient_rhs(b, g, kd[i], ku[i])
        db2, dg2 = _coefficient_rhs(b + 0.5 * h * db1, g + 0.5 * h * dg1, kd_mid[i], ku_mid[i])
        db3, dg3 = _coefficient_rhs(b + 0.5 * h * db2, g + 0.5 * h * dg2, kd_mid[i], ku_mid[i])
        db4, dg4 = _coefficient_rhs(b + h * db3, g + h * dg3, kd[i + 1], ku[i + 1])
        b = b + h / 6.0 * (db1 + 2 * db2 + 2 * db3 + db4)
        g = g + h / 6.0 * (dg1 + 2 * dg2 + 2 * dg3 + dg4)
        if not b < 0 or not 4 * abs(g) ** 2 < math.expm1(-b) ** 2:
            raise IntegrationError(
                f"state left the normalizable domain at t = {t[i + 1]:g} "
                f"(beta = {b:g}, |gamma| = {abs(g):g})",
                time=float(t[i + 1]),
            )
        beta[i + 1] = b
        gamma[i + 1] = g

    sqq, spp, spq = _covariance_arrays(
        beta, gamma, protocol.mu, protocol.omega, protocol.system.m
    )
    return _assemble(protocol, sqq, spp, spq, beta=beta, gamma=gamma)


def quench_sudden(
    initial: MomentVector, omega_from: float, omega_to: float, params: SystemParams
) -> MomentVector:
    """Moment map of an instantaneous frequency jump; the state is unchanged.

    With r = (omega_to / omega_from)^2:
        h' = [h (1 + r) + l (1 - r)] / 2
        l' = [h (1 - r) + l (1 + r)] / 2
        c' = (omega_to / omega_from) c
    """
    if omega_from <= 0 or omega_to <= 0:
        raise ValueError("frequencies must be positive")
    r = (omega_to / omega_from) ** 2
    return MomentVector(
        h=0.5 * (initial.h * (1 + r) + initial.l * (1 - r)),
        l=0.5 * (initial.h * (1 - r) + initial.l * (1 + r)),
        c=(omega_to / omega_from) * initial.c,
    )


def quench_relax(
    moments: MomentVector, omega_f: float, bath: BathParams, t: float
) -> MomentVector:
    """Free relaxation of (h, l, c) at fixed frequency for a time t.

    h decays toward the thermal energy at rate Gamma = k_down - k_up while
    (l, c) rotate at omega_f under the same envelope.
    """
    if omega_f <= 0:
        raise ValueError("omega_f must be positive")
    h, l, c = _relax_arrays(
        moments.h, moments.l, moments.c, omega_f, bath, np.asarray(float(t))
    )
    return MomentVector(float(h), float(l), float(c))


def _relax_arrays(h0, l0, c0, omega_f, bath: BathParams, t):
    kd, ku = _rate_arrays(omega_f, bath)
    gamma_rate = QUENCH_DECAY_FACTOR * (kd - ku)
    envelope = np.exp(-gamma_rate * t)
    phase = QUENCH_ROTATION_FACTOR * omega_f * t
    ct, st = np.cos(phase), np.sin(phase)
    h_eq = thermal_energy(omega_f, bath.T)
    h = envelope * h0 + h_eq * (1.0 - envelope)
    l = envelope * (ct * l0 - st * c0)
    c = envelope * (st * l0 + ct * c0)
    return h, l, c


def quench_trajectory(protocol: Protocol) -> Trajectory:
    """Sudden jump omega_i -> omega_f at t = 0+, then closed-form relaxation.

    Sample 0 holds the pre-jump thermal state, so the energy column shows
    the work step explicitly and the first law holds from t = 0.
    """
    sys_, bath = protocol.system, protocol.bath
    w_i, w_f = sys_.omega_i, sys_.omega_f
    t = protocol.t
    h0 = float(thermal_energy(w_i, bath.T))
    start = MomentVector(h=h0, l=0.0, c=0.0)
    jumped = quench_sudden(start, w_i, w_f, sys_)
    h, l, c = _relax_arrays(jumped.h, jumped.l, jumped.c, w_f, bath, t[1:])

    m = sys_.m
    sqq = np.empty(t.size)
    spp = np.empty(t.size)
    spq = np.empty(t.size)
    sqq[1:] = (h - l) / (m * w_f**2)
    spp[1:] = m * (h + l)
    spq[1:] = c / w_f
    coth = 1.0 / math.tanh(w_i / (2 * bath.T))
    sqq[0] = coth / (2 * m * w_i)
    spp[0] = m * w_i * coth / 2
    spq[0] = 0.0
    omega_traj = protocol.omega.copy()
    omega_traj[0] = w_i
    work_traj = np.full(t.size, jumped.h - h0)
    work_traj[0] = 0.0
    return _assemble(protocol, sqq, spp, spq, omega=omega_traj, work_override=work_traj)


def adiabatic_trajectory(
    omega_path: Protocol | np.ndarray, bath: BathParams | None = None,
    system: SystemParams | None = None, t: np.ndarray | None = None,
) -> Trajectory:
    """Quasi-static reference: the state is thermal at the instantaneous frequency."""
    if isinstance(omega_path, Protocol):
        protocol = omega_path
    else:
        from .synthesis import custom_protocol

        omega_path = np.asarray(omega_path, dtype=float)
        if bath is None or system is None or t is None:
            raise ValueError("array input requires bath, system and t")
        protocol = custom_protocol(t, omega_path, system, bath, ProtocolKind.ADIABATIC)
    bath = protocol.bath
    beta = -protocol.omega / bath.T
    gamma = np.zeros(protocol.t.size, dtype=complex)
    sqq, spp, spq = _covariance_arrays(
        beta, gamma, np.zeros_like(beta), protocol.omega, protocol.system.m
    )
    return _assemble(protocol, sqq, spp, spq, beta=beta, gamma=gamma)


def _assemble(protocol, sqq, spp, spq, omega=None, work_override=None, beta=None, gamma=None):
    m = protocol.system.m
    if omega is None:
        omega = protocol.omega
    energy = spp / (2 * m) + 0.5 * m * omega**2 * sqq
    if work_override is None:
        w = _work_series(protocol, omega, sqq)
    else:
        w = work_override
    q = energy - energy[0] - w
    nu = np.sqrt(sqq * spp - spq**2)
    entropy = _entropy_from_nu(nu)
    target = _target_covariance(protocol)
    fid = _fidelity_arrays(sqq, spp, spq, *target)
    return Trajectory(
        kind=protocol.kind, t=protocol.t, omega=omega,
        sigma_qq=sqq, sigma_pp=spp, sigma_pq=spq,
        energy=energy, work=w, heat=q, entropy=entropy, fidelity_to_target=fid,
        system=protocol.system, bath=protocol.bath, beta=beta, gamma=gamma,
    )


def _target_covariance(protocol):
    # target = thermal state at the configured final trap frequency
    w_f = float(protocol.system.omega_f)
    bath = protocol.bath
    m = protocol.system.m
    coth = 1.0 / math.tanh(w_f / (2 * bath.T))
    return coth / (2 * m * w_f), m * w_f * coth / 2, 0.0


def _work_series(protocol, omega, sqq):
    t = protocol.t
    dt = t[1] - t[0]
    omega_dot = np.gradient(omega, dt, edge_order=2)
    rate = protocol.system.m * omega * omega_dot * sqq
    w = np.empty(t.size)
    w[0] = 0.0
    np.cumsum((rate[1:] + rate[:-1]) * (dt / 2.0), out=w[1:])
    return w


def work(trajectory: Trajectory) -> np.ndarray:
    """Cumulative work W(t) = integral of m omega omega_dot <Q^2>.

    For a quench the work equals the sudden energy jump and is constant
    afterwards.
    """
    return trajectory.work.copy()


def heat(trajectory: Trajectory) -> np.ndarray:
    """Cumulative heat from first-law bookkeeping: Q(t) = E(t) - E(0) - W(t)."""
    return trajectory.energy - trajectory.energy[0] - trajectory.work


def entropy_balance(trajectory: Trajectory, bath: BathParams | None = None) -> EntropyBalance:
    """Entropy change of system and bath over the full trajectory.

    The bath side is -Q/T.  A total below -1e-6 signals integration
    trouble and raises.
    """
    if bath is None:
        bath = trajectory.bath
    ds_sys = float(trajectory.entropy[-1] - trajectory.entropy[0])
    ds_bath = float(-trajectory.heat[-1] / bath.T)
    total = ds_sys + ds_bath
    if total < -1e-6:
        raise IntegrationError(
            f"negative entropy production {total:g}; integration accuracy is "
            "insufficient for this protocol"
        )
    return EntropyBalance(dS_sys=ds_sys, dS_bath=ds_bath, dS_total=total)


def efficiency(W: float, W_adi: float, direction: str) -> float:
    """Work efficiency against the quasi-static reference.

    Compression: eta = W_adi / W.  Expansion: eta = W / W_adi.
    """
    if direction not in ("compression", "expansion"):
        raise ValueError(f"direction must be 'compression' or 'expansion', got {direction!r}")
    if W == 0.0 or W_adi == 0.0:
        raise ZeroDivisionError("efficiency undefined for zero work")
    if W * W_adi < 0:
        raise ValueError(
            f"work signs inconsistent with a {direction}: W = {W:g}, W_adi = {W_adi:g}"
        )
    return W_adi / W if direction == "compression" else W / W_adi


def fit_decay_rate(t: np.ndarray, one_minus_f: np.ndarray,
                   window: tuple[float, float] | None = None) -> float:
    """Least-squares slope of ln(1 - F); returns the positive decay rate.

    window restricts the fit to t in [t_lo, t_hi].  All values inside the
    window must be positive.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(one_minus_f, dtype=float)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t, y = t[mask], y[mask]
    if t.size < 3:
        raise ValueError("need at least 3 samples in the fit window")
    if np.any(y <= 0):
        raise ValueError("1 - F must be positive across the fit window")
    slope = np.polyfit(t, np.log(y), 1)[0]
    if slope >= 0:
        raise ValueError(f"series does not decay over the window (slope {slope:g})")
    return float(-slope)


def simulate(protocol: Protocol, initial: GeneralizedGibbsState | None = None) -> Trajectory:
    """Dispatch a protocol to the matching propagation scheme."""
    if protocol.kind is ProtocolKind.QUENCH:
        return quench_trajectory(protocol)
    if protocol.kind is ProtocolKind.ADIABATIC:
        return adiabatic_trajectory(protocol)
    return evolve_beta_gamma(protocol, initial)


def direction_of(system: SystemParams) -> str:
    return "compression" if system.omega_f >= system.omega_i else "expansion"


def adiabatic_work(system: SystemParams, bath: BathParams) -> float:
    """Quasi-static work between the endpoint thermal states."""
    return isothermal_work(system.omega_i, system.omega_f, bath.T)
