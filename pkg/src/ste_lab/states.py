"""Gaussian states of a thermally damped parametric oscillator.

The oscillator couples to its bath through a driving-adapted lowering
operator b that depends on the instantaneous frequency omega and on the
adiabatic parameter mu = (d omega/dt)/omega^2.  States that stay Gaussian
under the dissipative dynamics are parameterized by a real coefficient
beta and a complex squeezing coefficient gamma,

    rho = Z^-1 exp(gamma b^2) exp(beta b^dag b) exp(gamma* b^dag^2),

together with the (omega, mu) frame in which b is defined.  This module
provides that parameterization, the equivalent second-moment (covariance)
representation, the maps between them, and the fidelity and entropy
functionals evaluated on covariances.

Units: hbar = k_B = 1 throughout.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemParams",
    "BathParams",
    "GeneralizedGibbsState",
    "CovarianceState",
    "MomentVector",
    "partition_function",
    "thermal_state",
    "occupation",
    "to_covariance",
    "to_moments",
    "from_moments",
    "fidelity",
    "von_neumann_entropy",
]


@dataclass(frozen=True)
class SystemParams:
    """Oscillator mass and the endpoint frequencies of a transformation."""

    m: float = 1.0
    omega_i: float = 5.0
    omega_f: float = 10.0

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.omega_i <= 0 or self.omega_f <= 0:
            raise ValueError(
                f"frequencies must be positive, got omega_i={self.omega_i}, "
                f"omega_f={self.omega_f}"
            )


@dataclass(frozen=True)
class BathParams:
    """Bath temperature T and dimensionless coupling prefactor g."""

    T: float = 2.0
    g: float = 0.02

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"temperature must be positive, got {self.T}")
        if self.g <= 0:
            raise ValueError(f"coupling prefactor must be positive, got {self.g}")


@dataclass(frozen=True)
class GeneralizedGibbsState:
    """Gaussian state coefficients (beta, gamma) in an (omega, mu) frame.

    Normalizability requires beta < 0 and 4|gamma|^2 < (e^-beta - 1)^2;
    the frame requires |mu| < 2 so that kappa = sqrt(4 - mu^2) is real.
    """

    beta: float
    gamma: complex = 0.0
    omega: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if not self.beta < 0:
            raise ValueError(f"beta must be negative, got {self.beta}")
        lim = math.expm1(-self.beta) ** 2
        if not 4 * abs(self.gamma) ** 2 < lim:
            raise ValueError(
                f"squeezing too strong: 4|gamma|^2 = {4 * abs(self.gamma) ** 2} "
                f"must be < (e^-beta - 1)^2 = {lim}"
            )
        if not abs(self.mu) < 2:
            raise ValueError(f"|mu| must be < 2, got {self.mu}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")


@dataclass(frozen=True)
class CovarianceState:
    """Second moments of a centered Gaussian state.

    sigma_pq is the symmetrized covariance <QP + PQ>/2.  The Heisenberg
    bound det(sigma) >= 1/4 is enforced up to floating tolerance.
    """

    sigma_qq: float
    sigma_pp: float
    sigma_pq: float = 0.0

    def __post_init__(self):
        if self.sigma_qq <= 0 or self.sigma_pp <= 0:
            raise ValueError("variances must be positive")
        d = self.det()
        if d < 0.25 * (1 - 1e-10):
            raise ValueError(f"Heisenberg bound violated: det sigma = {d} < 1/4")

    def det(self) -> float:
        return self.sigma_qq * self.sigma_pp - self.sigma_pq**2

    def symplectic_eigenvalue(self) -> float:
        return math.sqrt(self.det())


@dataclass(frozen=True)
class MomentVector:
    """Expectation values of the Hamiltonian, Lagrangian and correlation operators.

    h = <P^2/2m + m w^2 Q^2/2>, l = <P^2/2m - m w^2 Q^2/2>, c = w <QP+PQ>/2.
    """

    h: float
    l: float
    c: float

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError(f"energy must be positive, got {self.h}")
        if self.h <= abs(self.l):
            raise ValueError(f"unphysical moments: h = {self.h} <= |l| = {abs(self.l)}")


def partition_function(beta: float, gamma: complex = 0.0) -> float:
    """Normalization Z(beta, gamma) = e^-beta / [(e^-beta - 1) sqrt(1 - 4|gamma|^2/(e^-beta - 1)^2)]."""
    _check_coefficients(beta, gamma)
    em = math.exp(-beta)
    denom = em - 1.0
    return em / (denom * math.sqrt(1.0 - 4.0 * abs(gamma) ** 2 / denom**2))


def thermal_state(omega: float, bath: BathParams) -> GeneralizedGibbsState:
    """Thermal equilibrium state at frequency omega: beta = -omega/T, no squeezing."""
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return GeneralizedGibbsState(beta=-omega / bath.T, gamma=0.0, omega=omega, mu=0.0)


def occupation(state: GeneralizedGibbsState) -> tuple[float, complex]:
    """Second moments (n, xi) = (<b^dag b>, <b^2>) of the state.

    Closed form obtained by commuting b, b^dag through the three
    exponential factors (the factors act on (b, b^dag) as an SL(2)
    transformation); reduces to the Bose factor n = 1/(e^-beta - 1),
    xi = 0 at gamma = 0.
    """
    n, xi = _occupation_arrays(state.beta, state.gamma)
    return float(n), complex(xi)


def to_covariance(state: GeneralizedGibbsState, params: SystemParams) -> CovarianceState:
    """Position/momentum second moments of the state in its (omega, mu) frame."""
    qq, pp, pq = _covariance_arrays(
        state.beta, state.gamma, state.mu, state.omega, params.m
    )
    return CovarianceState(float(qq), float(pp), float(pq))


def to_moments(cov: CovarianceState, omega: float, params: SystemParams) -> MomentVector:
    """Linear change of basis from covariances to (h, l, c) at frequency omega."""
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    m = params.m
    h = cov.sigma_pp / (2 * m) + 0.5 * m * omega**2 * cov.sigma_qq
    l = cov.sigma_pp / (2 * m) - 0.5 * m * omega**2 * cov.sigma_qq
    c = omega * cov.sigma_pq
    return MomentVector(h, l, c)


def from_moments(mv: MomentVector, omega: float, params: SystemParams) -> CovarianceState:
    """Inverse of :func:`to_moments`."""
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    m = params.m
    return CovarianceState(
        sigma_qq=(mv.h - mv.l) / (m * omega**2),
        sigma_pp=m * (mv.h + mv.l),
        sigma_pq=mv.c / omega,
    )


def fidelity(a: CovarianceState, b: CovarianceState) -> float:
    """Uhlmann fidelity of two centered single-mode Gaussian states.

    F = 2 / (sqrt(Delta + delta) - sqrt(delta)) with A_i = 2 sigma_i,
    Delta = det(A_1 + A_2) and delta = (det A_1 - 1)(det A_2 - 1).
    For pure states this equals the squared overlap |<psi_1|psi_2>|^2.
    """
    f = _fidelity_arrays(
        np.asarray(a.sigma_qq), np.asarray(a.sigma_pp), np.asarray(a.sigma_pq),
        np.asarray(b.sigma_qq), np.asarray(b.sigma_pp), np.asarray(b.sigma_pq),
    )
    return float(f)


def von_neumann_entropy(cov: CovarianceState) -> float:
    """Entropy of a single-mode Gaussian state from its symplectic eigenvalue."""
    nu = cov.symplectic_eigenvalue()
    return float(_entropy_from_nu(np.asarray(nu)))


# ---------------------------------------------------------------------------
# array kernels shared with the integrator

def _check_coefficients(beta, gamma):
    if not np.all(beta < 0):
        raise ValueError("beta must be negative")
    lim = np.expm1(-np.asarray(beta)) ** 2
    if not np.all(4 * np.abs(gamma) ** 2 < lim):
        raise ValueError("squeezing coefficient out of the normalizable domain")


def _occupation_arrays(beta, gamma):
    """(n, xi) for array-valued (beta, gamma)."""
    y = np.exp(np.asarray(beta, dtype=float))
    g2 = np.abs(gamma) ** 2
    d = 1.0 - 1.0 / y + 4.0 * g2 * y
    n = (y * d - 4.0 * g2 * y**2) / ((1.0 - y) * d + 4.0 * g2 * y**2)
    xi = -2.0 * np.conj(gamma) * y * (n + 1.0) / d
    return n, xi


def _covariance_arrays(beta, gamma, mu, omega, m):
    """(sigma_qq, sigma_pp, sigma_pq) for array-valued state parameters.

    Inverts the frame definition
        b = sqrt(m omega / kappa) (kappa + i mu)/2 (Q + (mu + i kappa)/(2 m omega) P)
    which satisfies [b, b^dag] = 1, giving
        Q = sqrt(1/(m omega kappa)) (b + b^dag)
        P = sqrt(m omega / kappa) (kappa v - mu x)/2,  x = b + b^dag, v = i(b^dag - b).
    """
    mu = np.asarray(mu, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if np.any(np.abs(mu) >= 2):
        raise ValueError("|mu| must be < 2 for a real frame")
    n, xi = _occupation_arrays(beta, gamma)
    kappa = np.sqrt(4.0 - mu**2)
    re, im = np.real(xi), np.imag(xi)
    xx = 2.0 * n + 1.0 + 2.0 * re       # <x^2>
    vv = 2.0 * n + 1.0 - 2.0 * re       # <v^2>
    xv = 2.0 * im                       # <xv + vx>/2
    sqq = xx / (m * omega * kappa)
    spp = (m * omega / kappa) * (kappa**2 * vv / 4 + mu**2 * xx / 4 - kappa * mu * xv / 2)
    spq = im - mu / (2.0 * kappa) * xx
    return sqq, spp, spq


def _fidelity_arrays(qq1, pp1, pq1, qq2, pp2, pq2):
    det1 = 4.0 * (qq1 * pp1 - pq1**2)
    det2 = 4.0 * (qq2 * pp2 - pq2**2)
    if np.any(det1 < 1.0 - 1e-9) or np.any(det2 < 1.0 - 1e-9):
        raise ValueError("Heisenberg bound violated")
    big = 4.0 * ((qq1 + qq2) * (pp1 + pp2) - (pq1 + pq2) ** 2)
    small = (det1 - 1.0) * (det2 - 1.0)
    small = np.maximum(small, 0.0)
    return 2.0 / (np.sqrt(big + small) - np.sqrt(small))


def _entropy_from_nu(nu):
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0.5 * (1 - 1e-10)):
        raise ValueError("symplectic eigenvalue below the pure-state value 1/2")
    up = (nu + 0.5) * np.log(nu + 0.5)
    lo = nu - 0.5
    down = np.where(lo > 0, lo * np.log(np.where(lo > 0, lo, 1.0)), 0.0)
    return up - down
