"""Damped f- and q-deformed quantum harmonic oscillator on a truncated Fock basis."""

__version__ = "0.1.0"

from .algebra import (
    DeformationSpec,
    OscillatorModel,
    bracket,
    energy_level,
    hamiltonian_matrix,
    ladder_matrices,
    omega_shift,
    phi,
)
from .bath import BathModel, constant_bath, table_bath, thermal_bath, validate_bath
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    coherence_rhs,
    energy,
    evolve_density,
    evolve_populations,
    mean_N,
    mean_N_closed_form,
    mean_N_rhs,
)
from .liouvillian import (
    FullGenerator,
    apply_full_generator,
    build_population_generator,
    operator_form_rhs,
    transition_rates,
)
from .stationary import (
    c_coefficient,
    detailed_balance_residual,
    equilibrium_energy,
    partition_function,
    steady_populations,
    thermal_boltzmann,
)
