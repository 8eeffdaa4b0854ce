"""Exception types for geometric preconditions and input validation."""


class GeometryError(ValueError):
    """A geometric precondition failed (unbounded part, bad dimension, ...)."""


class UnboundedPolytopeError(GeometryError):
    """A polytope that must be bounded has a nontrivial recession cone."""


class CapExceededError(GeometryError):
    """Part count exceeds the inclusion-exclusion cap (CURVKIT_IE_CAP)."""


class TangencyError(GeometryError):
    """A sampled flat is tangent to the target set; the sample is rejected."""


class InputError(ValueError):
    """Malformed user input (scene files, CLI arguments)."""
