class LockPerfError(Exception):
    """Base class for errors raised by this package."""


class ModelError(LockPerfError, ValueError):
    """Invalid input to one of the analytical model equations."""


class ConfigurationError(LockPerfError, ValueError):
    """A workload or run configuration violates its invariants."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class SolverError(LockPerfError, RuntimeError):
    """The fixed-point iteration produced a non-finite value."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class SimulationError(LockPerfError, RuntimeError):
    """A simulator safety invariant was violated."""
