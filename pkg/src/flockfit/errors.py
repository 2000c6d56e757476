"""Exception types shared across the package."""


class FlockfitError(Exception):
    """Base class for all package-specific errors."""


class TooShort(FlockfitError):
    """A time series is too short for the requested operation."""


class ZeroResultant(FlockfitError):
    """A weighted direction sum cancelled out; no mean direction exists."""


class NonFinitePosition(FlockfitError):
    """Positions contain NaN or infinite coordinates."""


class EmptyInformedSet(FlockfitError):
    """An informed-agent prediction was requested with no informed agents."""


class InvalidSpec(FlockfitError):
    """A simulation specification violates its constraints."""


class InvalidParam(FlockfitError):
    """A numeric parameter is outside its valid range."""


class NoInformedAgent(FlockfitError):
    """A trajectory set has no informed agent to serve as the target path."""


class InfeasibleKappa(FlockfitError):
    """Lower-bound weights sum to more than 1; the constraint set is empty."""


class InconsistentAgents(FlockfitError):
    """Events in a collection do not share the same agent identities."""


class SingleClass(FlockfitError):
    """Classification requires at least two distinct labels."""


class ParseError(FlockfitError):
    """An input file could not be parsed; message names file and line."""
