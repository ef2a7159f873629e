"""Shortcut-to-equilibration protocols for a thermally damped harmonic oscillator.

Synthesizes driving protocols omega(t) that steer the oscillator between
thermal states in a finite time, simulates them alongside quench and
quasi-static references, and accounts for the fidelity, work, heat and
entropy cost of each route.
"""

from .dynamics import (
    EntropyBalance,
    IntegrationError,
    Trajectory,
    adiabatic_trajectory,
    adiabatic_work,
    efficiency,
    entropy_balance,
    evolve_beta_gamma,
    fit_decay_rate,
    heat,
    quench_relax,
    quench_sudden,
    quench_trajectory,
    simulate,
    work,
)
from .rates import (
    InertialReport,
    RatePair,
    adiabatic_parameter,
    bose_occupation,
    decay_rates,
    inertial_parameter,
    inertial_report,
    isothermal_work,
    min_protocol_duration,
    modified_frequency,
    thermal_energy,
)
from .states import (
    BathParams,
    CovarianceState,
    GeneralizedGibbsState,
    MomentVector,
    SystemParams,
    fidelity,
    from_moments,
    occupation,
    partition_function,
    thermal_state,
    to_covariance,
    to_moments,
    von_neumann_entropy,
)
from .synthesis import (
    Protocol,
    ProtocolKind,
    SteAnsatz,
    SynthesisError,
    adiabatic_protocol,
    constant_protocol,
    custom_protocol,
    quench_protocol,
    recover_omega,
    solve_alpha,
    synthesize_ste,
    y_ansatz,
)

__version__ = "0.1.0"
