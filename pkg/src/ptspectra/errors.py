"""Exception types shared across the solver modules."""


class PtspectraError(Exception):
    """Base class for all solver errors."""


class DegenerateEnergy(PtspectraError):
    """Energy too close to a branch point of the characteristic function."""


class NoConvergence(PtspectraError):
    """Iterative root search exhausted its budget without meeting tolerances."""


class BadBracket(PtspectraError):
    """No real-to-complex transition found where an exceptional point was requested."""


class LostBranch(PtspectraError):
    """Continuation could not extend a branch within the continuity bound."""


class AmbiguousTransition(PtspectraError):
    """Branch pair oscillates across the real-axis tolerance; cannot classify."""


class IntegrationOverflow(PtspectraError):
    """Wavefunction magnitude exceeded the overflow guard during integration."""


class UnboundedPotential(PtspectraError):
    """Potential is not confining at the truncation boundary (no decaying start)."""


class BadGeometry(PtspectraError):
    """Discretization geometry is inconsistent (e.g. delta outside the domain)."""


class ConfigError(PtspectraError):
    """Invalid or malformed run configuration."""
