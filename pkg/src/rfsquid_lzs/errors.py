"""Exception hierarchy shared by the simulation modules and the CLI."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SimulationError, ValueError):
    """An input lies outside the documented validity envelope."""


class RateOverflowError(SimulationError, OverflowError):
    """An exponential rate law would overflow double precision."""


class DegenerateChainError(SimulationError):
    """The generator has more than one stationary distribution."""


class IntegrationError(SimulationError):
    """Adaptive time stepping failed; carries the solver state at failure."""

    def __init__(self, message, t=None, h=None, steps=None):
        super().__init__(message)
        self.t = t
        self.h = h
        self.steps = steps


class ResolutionError(SimulationError):
    """An eigen-solve did not converge under grid refinement."""


class ConfigError(SimulationError):
    """A configuration file or CLI argument is invalid."""
