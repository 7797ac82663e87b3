"""Exception hierarchy shared across the package."""


class SimulationError(Exception):
    """Base class for all runtime failures raised by this package."""


class ConfigError(SimulationError):
    """Scenario configuration is malformed or violates the schema."""


class MemoryBudgetError(SimulationError):
    """A grid would exceed the configured memory budget."""


class EdgeMassError(SimulationError):
    """Too much probability mass reached the periodic box boundary."""


class ModelViolationError(SimulationError):
    """An input state is outside the model assumed by the operation."""


class BranchOverlapError(SimulationError):
    """Measurement branches re-interfered; the disjointness hypothesis broke."""
