"""Exception types raised by the model, solver and control laws."""


class DomainError(ValueError):
    """An input lies outside the domain of a model formula."""


class ControlLawError(RuntimeError):
    """Base class for failures of the cascade control synthesis."""


class NoRootInBracket(ControlLawError):
    """The angle-of-attack equation has no root in the search bracket."""


class AmbiguousRoot(ControlLawError):
    """Two roots are equally close to the warm start."""


class ManifoldSingular(ControlLawError):
    """dG/dalpha vanishes at the solved root; implicit partials are undefined."""


class NozzleLawSingular(ControlLawError):
    """dphi/ddelta_p vanishes; the nozzle-rate law cannot be inverted."""


class DegeneratePressure(ControlLawError):
    """Dynamic pressure times area and chord is too small to invert the moment law."""


class EmptyWindow(ValueError):
    """No samples fall inside the window used to fit a decay rate."""


class GridMismatch(ValueError):
    """Two trajectory logs do not share a time grid."""


class ScenarioError(ValueError):
    """A scenario file is malformed or violates a scenario invariant."""
