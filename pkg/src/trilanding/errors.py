class DomainError(ValueError):
    """An argument lies outside the domain where a model is defined."""


class UnboundedBoundaryError(DomainError):
    """The phase limit is never reached within the search radius."""


class ScenarioError(ValueError):
    """A scenario file is malformed or names an unknown key."""


class InvariantViolation(RuntimeError):
    """A simulation produced a state that breaks a model invariant."""
