"""Reverse-engineering of equilibration-shortcut driving protocols.

The state coefficient beta obeys a single closed equation once the
squeezing coefficient vanishes,

    d(e^beta)/dt = k_down(alpha) y^2 - y (k_down(alpha) + k_up(alpha)) + k_up(alpha),

with y = e^beta.  A protocol is synthesized backwards: prescribe y(s) on
the scaled time s = t/t_f as a cubic that is stationary at both ends,
solve the implicit equation above for the modified frequency alpha(s),
and recover the physical control omega(t) from
alpha = omega sqrt(1 - mu^2/4) with mu = (d omega/dt)/omega^2.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .rates import InertialReport, _rate_arrays, inertial_report
from .states import BathParams, SystemParams

__all__ = [
    "SynthesisError",
    "ProtocolKind",
    "SteAnsatz",
    "Protocol",
    "y_ansatz",
    "solve_alpha",
    "recover_omega",
    "synthesize_ste",
    "constant_protocol",
    "quench_protocol",
    "adiabatic_protocol",
    "custom_protocol",
]


class SynthesisError(RuntimeError):
    """Raised when a protocol cannot be reverse-engineered.

    Carries the scaled time and ansatz values at the failing point when
    the failure is local to one grid node.
    """

    def __init__(self, message, s=None, y=None, dy_ds=None):
        super().__init__(message)
        self.s = s
        self.y = y
        self.dy_ds = dy_ds


class ProtocolKind(str, enum.Enum):
    STE = "ste"
    QUENCH = "quench"
    ADIABATIC = "adiabatic"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SteAnsatz:
    """Boundary data and grid for the cubic interpolation of y = e^beta."""

    y0: float
    yf: float
    t_f: float
    n_grid: int = 4000

    def __post_init__(self):
        if not 0 < self.y0 < 1 or not 0 < self.yf < 1:
            raise ValueError(
                f"thermal endpoints require 0 < y < 1, got y0={self.y0}, yf={self.yf}"
            )
        if self.t_f <= 0:
            raise ValueError(f"duration must be positive, got {self.t_f}")
        if self.n_grid < 16:
            raise ValueError(f"n_grid must be >= 16, got {self.n_grid}")

    @property
    def delta(self) -> float:
        return self.yf - self.y0


@dataclass
class Protocol:
    """A sampled driving protocol omega(t) with its derived quantities.

    The samples live on a uniform grid t[0] = 0 .. t[-1] = t_f.  mu is the
    finite-difference adiabatic parameter, alpha the modified frequency
    and (k_down, k_up) the jump rates along the drive.
    """

    kind: ProtocolKind
    t: np.ndarray
    omega: np.ndarray
    mu: np.ndarray
    alpha: np.ndarray
    k_down: np.ndarray
    k_up: np.ndarray
    system: SystemParams
    bath: BathParams
    inertial: InertialReport | None = None

    def __post_init__(self):
        if np.any(self.omega <= 0):
            raise ValueError("protocol frequency must stay positive")
        if np.any(np.abs(self.mu) >= 2):
            raise ValueError("protocol exceeds |mu| < 2")

    @property
    def t_f(self) -> float:
        return float(self.t[-1])

    @property
    def n_samples(self) -> int:
        return self.t.size


def y_ansatz(s, ansatz: SteAnsatz):
    """Cubic y(s) = y0 + 3 delta s^2 - 2 delta s^3 and its s-derivative.

    Stationary at both ends: y'(0) = y'(1) = 0.
    """
    s = np.asarray(s, dtype=float)
    d = ansatz.delta
    y = ansatz.y0 + 3.0 * d * s**2 - 2.0 * d * s**3
    dy = 6.0 * d * s * (1.0 - s)
    return y, dy


def _control_residual(alpha, y, target, bath):
    """k_down y^2 - y (k_down + k_up) + k_up - target, vectorized in alpha."""
    kd, ku = _rate_arrays(alpha, bath)
    return kd * y * y - y * (kd + ku) + ku - target


def solve_alpha(y: float, dy_ds: float, t_f: float, bath: BathParams) -> float:
    """Root alpha > 0 of the implicit control equation at one grid point.

    The prescribed growth rate of y is dy_ds / t_f.  At a stationary point
    (dy_ds = 0) the root is the detailed-balance value -T ln y exactly.
    """
    if not 0 < y < 1:
        raise ValueError(f"y must lie in (0, 1), got {y}")
    if dy_ds == 0.0:
        return -bath.T * math.log(y)
    alpha = _solve_alpha_grid(
        np.asarray([y]), np.asarray([dy_ds]), t_f, bath
    )
    return float(alpha[0])


def _solve_alpha_grid(y, dy_ds, t_f, bath, widenings=60, bisections=200):
    """Vectorized bracketed bisection with a secant polish.

    Brackets around the detailed-balance root alpha_db = -T ln y and widens
    geometrically until the residual changes sign.  Raises SynthesisError
    when no bracket exists (the bath cannot supply the prescribed rate).
    """
    y = np.asarray(y, dtype=float)
    target = np.asarray(dy_ds, dtype=float) / t_f
    alpha_db = -bath.T * np.log(y)
    lo = alpha_db / 4.0
    hi = alpha_db * 4.0
    flo = _control_residual(lo, y, target, bath)
    fhi = _control_residual(hi, y, target, bath)
    for _ in range(widenings):
        bad = flo * fhi > 0
        if not bad.any():
            break
        lo = np.where(bad, lo / 2.0, lo)
        hi = np.where(bad, hi * 2.0, hi)
        flo = np.where(bad, _control_residual(lo, y, target, bath), flo)
        fhi = np.where(bad, _control_residual(hi, y, target, bath), fhi)
    else:
        i = int(np.argmax(flo * fhi))
        raise SynthesisError(
            "no sign change for the control equation; the prescribed rate "
            "exceeds what the bath supports (duration too short)",
            s=None, y=float(y.flat[i]), dy_ds=float(np.asarray(dy_ds).flat[i]),
        )
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        fm = _control_residual(mid, y, target, bath)
        left = flo * fm <= 0
        hi = np.where(left, mid, hi)
        fhi = np.where(left, fm, fhi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
        if np.max(hi - lo) <= 16 * np.finfo(float).eps * np.max(hi):
            break
    # one secant step inside the final bracket sharpens the last bits
    denom = fhi - flo
    safe = denom != 0
    root = np.where(safe, lo - flo * (hi - lo) / np.where(safe, denom, 1.0), 0.5 * (lo + hi))
    root = np.clip(root, lo, hi)
    # stationary points get the analytic detailed-balance root
    root = np.where(target == 0.0, alpha_db, root)
    return root


def recover_omega(alpha_grid: np.ndarray, t_grid: np.ndarray,
                  tol: float = 1e-12, max_iter: int = 60) -> np.ndarray:
    """Invert alpha = omega sqrt(1 - mu^2/4) for omega(t) on a uniform grid.

    mu is the second-order finite-difference derivative of omega (one-sided
    at the endpoints).  The discretized system is solved by a damped Newton
    iteration with a banded Jacobian; the residual at the solution is
    checked against the requested tolerance.
    """
    alpha = np.asarray(alpha_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    n = alpha.size
    if n < 5:
        raise ValueError("need at least 5 samples")
    dt = t[1] - t[0]
    omega = alpha.copy()

    def residual(om):
        d1 = np.gradient(om, dt, edge_order=2)
        mu = d1 / om**2
        bad = np.abs(mu) >= 2
        if bad.any():
            return None, mu
        return om * np.sqrt(1.0 - mu**2 / 4.0) - alpha, mu

    res, mu = residual(omega)
    if res is None:
        raise SynthesisError("initial guess violates |mu| < 2")
    for _ in range(max_iter):
        if np.max(np.abs(res) / alpha) < tol:
            return omega
        r = np.sqrt(1.0 - mu**2 / 4.0)
        c = -omega * mu / (4.0 * r)          # d(omega r)/d(mu)
        diag = r + c * (-2.0 * mu / omega)   # mu depends on omega through 1/omega^2
        sub = np.zeros(n)
        sup = np.zeros(n)
        inv2dt = 1.0 / (2.0 * dt)
        sub[:-1] = c[1:] * (-inv2dt) / omega[1:] ** 2
        sup[1:] = c[:-1] * (inv2dt) / omega[:-1] ** 2
        # one-sided stencils (-3, 4, -1)/(2 dt) at the ends
        diag[0] += c[0] * (-3.0 * inv2dt) / omega[0] ** 2
        sup[1] = c[0] * (4.0 * inv2dt) / omega[0] ** 2
        corner0 = c[0] * (-inv2dt) / omega[0] ** 2           # column 2
        diag[-1] += c[-1] * (3.0 * inv2dt) / omega[-1] ** 2
        sub[-2] = c[-1] * (-4.0 * inv2dt) / omega[-1] ** 2
        corner1 = c[-1] * (inv2dt) / omega[-1] ** 2          # column n-3
        ab = np.zeros((5, n))
        ab[1, 1:] = sup[1:]
        ab[2, :] = diag
        ab[3, :-1] = sub[:-1]
        ab[0, 2] = corner0
        ab[4, n - 3] = corner1
        step = solve_banded((2, 2), ab, -res)
        lam = 1.0
        while lam > 1e-8:
            cand = omega + lam * step
            if np.all(cand > 0):
                res_new, mu_new = residual(cand)
                if res_new is not None:
                    break
            lam *= 0.5
        else:
            raise SynthesisError(
                "frequency recovery stalled; duration is likely below the "
                "inertial bound"
            )
        omega, res, mu = cand, res_new, mu_new
    if np.max(np.abs(res) / alpha) < 1e-6:
        return omega
    raise SynthesisError(
        f"frequency recovery did not converge: residual {np.max(np.abs(res) / alpha):.3e}"
    )


def _protocol_from_omega(kind, t, omega, system, bath, f_inertial=0.05):
    dt = t[1] - t[0]
    d1 = np.gradient(omega, dt, edge_order=2)
    mu = d1 / omega**2
    alpha = omega * np.sqrt(1.0 - mu**2 / 4.0)
    k_down, k_up = _rate_arrays(alpha, bath)
    report = inertial_report(t, omega, f_inertial)
    return Protocol(
        kind=kind, t=t, omega=omega, mu=mu, alpha=alpha,
        k_down=k_down, k_up=k_up, system=system, bath=bath, inertial=report,
    )


def synthesize_ste(
    system: SystemParams,
    bath: BathParams,
    t_f: float,
    n_grid: int = 4000,
    f_inertial: float = 0.05,
    y_fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None,
) -> Protocol:
    """Reverse-engineer the driving omega(t) that lands on the target thermal state.

    The default interpolation of y = e^beta is the stationary cubic of
    :func:`y_ansatz`; a custom (y, dy/ds) profile satisfying the same
    boundary conditions can be supplied through y_fn.  Warns when t_f is
    within 20% of the inertial duration bound of the synthesized profile.
    """
    if t_f <= 0:
        raise ValueError(f"duration must be positive, got {t_f}")
    if n_grid % 2:
        n_grid += 1
    ansatz = SteAnsatz(
        y0=math.exp(-system.omega_i / bath.T),
        yf=math.exp(-system.omega_f / bath.T),
        t_f=t_f,
        n_grid=n_grid,
    )
    s = np.linspace(0.0, 1.0, n_grid + 1)
    t = s * t_f
    if y_fn is None:
        y, dy = y_ansatz(s, ansatz)
    else:
        y, dy = y_fn(s)
    try:
        alpha = _solve_alpha_grid(y, dy, t_f, bath)
    except SynthesisError as err:
        err.s = None if err.y is None else float(s[np.argmin(np.abs(y - err.y))])
        raise
    jumps = np.abs(np.diff(alpha))
    scale = np.maximum(np.abs(alpha[1:]), np.abs(alpha[:-1]))
    if np.any(jumps > 0.2 * scale):
        i = int(np.argmax(jumps / scale))
        raise SynthesisError(
            "control root jumped branches between neighbouring grid points",
            s=float(s[i]), y=float(y[i]), dy_ds=float(dy[i]),
        )
    omega = recover_omega(alpha, t)
    protocol = _protocol_from_omega(ProtocolKind.STE, t, omega, system, bath, f_inertial)
    bound = protocol.inertial.t_f_min
    if t_f < 1.2 * bound:
        warnings.warn(
            f"duration t_f = {t_f:g} is within 20% of the inertial bound "
            f"{bound:g}; the slow-acceleration description degrades",
            stacklevel=2,
        )
    return protocol


def constant_protocol(
    omega: float, system: SystemParams, bath: BathParams, t_f: float, n_grid: int = 4000
) -> Protocol:
    """Static trap at frequency omega for a time t_f."""
    if n_grid % 2:
        n_grid += 1
    t = np.linspace(0.0, t_f, n_grid + 1)
    return _protocol_from_omega(
        ProtocolKind.CUSTOM, t, np.full(t.size, float(omega)), system, bath
    )


def quench_protocol(
    system: SystemParams, bath: BathParams, t_f: float, n_grid: int = 4000
) -> Protocol:
    """Sudden jump omega_i -> omega_f at t = 0, then free relaxation at omega_f."""
    if n_grid % 2:
        n_grid += 1
    t = np.linspace(0.0, t_f, n_grid + 1)
    return _protocol_from_omega(
        ProtocolKind.QUENCH, t, np.full(t.size, system.omega_f), system, bath
    )


def adiabatic_protocol(
    system: SystemParams, bath: BathParams, t_f: float, n_grid: int = 4000
) -> Protocol:
    """Quasi-static reference: the infinitely-slow limit of the shortcut family.

    In that limit the state is thermal at every instant and the drive
    reduces to omega(s) = -T ln y(s) along the same cubic interpolation.
    """
    if n_grid % 2:
        n_grid += 1
    ansatz = SteAnsatz(
        y0=math.exp(-system.omega_i / bath.T),
        yf=math.exp(-system.omega_f / bath.T),
        t_f=t_f,
        n_grid=n_grid,
    )
    s = np.linspace(0.0, 1.0, n_grid + 1)
    y, _ = y_ansatz(s, ansatz)
    omega = -bath.T * np.log(y)
    return _protocol_from_omega(ProtocolKind.ADIABATIC, s * t_f, omega, system, bath)


def custom_protocol(
    t: np.ndarray, omega: np.ndarray, system: SystemParams, bath: BathParams,
    kind: ProtocolKind = ProtocolKind.CUSTOM,
) -> Protocol:
    """Wrap externally supplied omega(t) samples on a uniform grid."""
    t = np.asarray(t, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if t.size != omega.size or t.size < 5:
        raise ValueError("need matching t and omega arrays with at least 5 samples")
    steps = np.diff(t)
    if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
        raise ValueError("time grid must be uniform and increasing")
    return _protocol_from_omega(kind, t, omega, system, bath)
