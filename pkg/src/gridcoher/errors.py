"""Exception types shared across the package."""


class GridcoherError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(GridcoherError):
    """Invalid graph structure or a Laplacian that fails validation."""


class DisconnectedGraphError(GraphError):
    """Graph is not connected (structurally or within eigenvalue tolerance)."""


class ParameterError(GridcoherError):
    """Physically meaningless or dimensionally inconsistent parameters."""


class AssumptionError(GridcoherError):
    """A closed-form result was requested outside its validity assumptions."""


class UnstableSystemError(GridcoherError):
    """Closed loop has an unstable mode or a trajectory diverged.

    ``time`` carries the first divergent timestamp when known.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ObservableMarginalModeError(GridcoherError):
    """A marginally stable mode leaks into the coherence output."""


class ConfigError(GridcoherError):
    """Malformed experiment configuration."""
