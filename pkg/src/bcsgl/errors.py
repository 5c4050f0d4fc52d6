"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code of its class so the pipeline can map
failures without a lookup table.
"""


class BcsglError(Exception):
    exit_code = 1


class ConfigError(BcsglError):
    """Invalid run configuration. ``violations`` lists every problem found."""

    exit_code = 2

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class InvalidArgument(BcsglError, ValueError):
    exit_code = 2


class DomainError(InvalidArgument):
    pass


class ConvergenceError(BcsglError):
    """Iterative solver did not converge. ``best`` holds the best iterate."""

    exit_code = 3

    def __init__(self, message, best=None, trace=None):
        super().__init__(message)
        self.best = best
        self.trace = trace


class NoPairing(ConvergenceError):
    """Lowest eigenvalue stays positive down to the smallest temperature probed."""


class AccuracyError(ConvergenceError):
    pass


class InternalConsistencyError(BcsglError):
    exit_code = 4


class DegeneratePairState(InternalConsistencyError):
    pass


class SymmetryError(InternalConsistencyError):
    pass


class StateInvariantError(InternalConsistencyError):
    pass


class DivergenceError(InternalConsistencyError):
    pass
