"""Configuration-space quantum dynamics with a transported ensemble of worlds.

The package propagates a wavefunction over a periodic configuration-space box
by Strang-split spectral stepping, samples ensembles of world configurations
from |Psi|^2, transports them along the velocity field j / rho, and runs an
ideal measurement model whose outcome statistics reproduce the Born weights
three independent ways (region volumes, coefficient ratios, ensemble
frequencies). See README.md for the acceptance suite and the ``sim`` CLI.
"""

from .errors import (
    BranchOverlapError,
    ConfigError,
    EdgeMassError,
    MemoryBudgetError,
    ModelViolationError,
    SimulationError,
)
from .evolution import (
    EvolutionLog,
    Hamiltonian,
    continuity_residual,
    default_dt,
    evolve,
    free_hamiltonian,
    harmonic_hamiltonian,
    step,
)
from .grid import Grid, make_grid, product_grid, set_fft_workers, spectral_derivative
from .kernels import BACKEND as KERNEL_BACKEND
from .measurement import (
    MeasurementSetup,
    apply_ideal_measurement,
    born_reference,
    carry_through_measurement,
    collapse,
    collapse_equivalence,
    expectation,
    outcome_probabilities,
    premeasurement_state,
    readout,
    readout_frequencies,
)
from .projection import expected_particle_count, particle_density, physical_grid
from .spin import (
    SpinSetup,
    carry_through_spin_measurement,
    spin_premeasurement,
    spin_probabilities,
    spin_readout,
    spin_readout_frequencies,
    stern_gerlach_measure,
)
from .wavefunction import (
    Region,
    Wavefunction,
    current,
    density,
    edge_mass,
    inner_product,
    norm,
    normalized,
    probability,
    total_volume,
    world_volume,
)
from .worlds import (
    TrajectoryRecord,
    VelocityField,
    WorldEnsemble,
    advance_worlds,
    equivariance_distance,
    sample_worlds,
    substream,
    velocity_field,
    velocity_from_phase,
)

__version__ = "0.1.0"

__all__ = [
    "BranchOverlapError",
    "ConfigError",
    "EdgeMassError",
    "MemoryBudgetError",
    "ModelViolationError",
    "SimulationError",
    "EvolutionLog",
    "Hamiltonian",
    "continuity_residual",
    "default_dt",
    "evolve",
    "free_hamiltonian",
    "harmonic_hamiltonian",
    "step",
    "Grid",
    "make_grid",
    "product_grid",
    "set_fft_workers",
    "spectral_derivative",
    "KERNEL_BACKEND",
    "MeasurementSetup",
    "apply_ideal_measurement",
    "born_reference",
    "carry_through_measurement",
    "collapse",
    "collapse_equivalence",
    "expectation",
    "outcome_probabilities",
    "premeasurement_state",
    "readout",
    "readout_frequencies",
    "expected_particle_count",
    "particle_density",
    "physical_grid",
    "SpinSetup",
    "carry_through_spin_measurement",
    "spin_premeasurement",
    "spin_probabilities",
    "spin_readout",
    "spin_readout_frequencies",
    "stern_gerlach_measure",
    "Region",
    "Wavefunction",
    "current",
    "density",
    "edge_mass",
    "inner_product",
    "norm",
    "normalized",
    "probability",
    "total_volume",
    "world_volume",
    "TrajectoryRecord",
    "VelocityField",
    "WorldEnsemble",
    "advance_worlds",
    "equivariance_distance",
    "sample_worlds",
    "substream",
    "velocity_field",
    "velocity_from_phase",
    "__version__",
]
