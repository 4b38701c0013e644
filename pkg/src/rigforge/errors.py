"""Exception hierarchy for rigforge.

Every error raised by the library derives from :class:`RigError` so callers
(CLI, service) can catch one type at the boundary and map it to exit codes /
protocol error replies.
"""

from __future__ import annotations


class RigError(Exception):
    """Base class for all rigforge errors."""

    code = "rig-error"


class InvalidValueError(RigError):
    """A numeric value violated a construction invariant (NaN, Inf, zero scale...)."""

    code = "invalid-value"


class DuplicateNameError(RigError):
    code = "duplicate-name"


class MissingNodeError(RigError):
    code = "missing-node"


class CycleError(RigError):
    code = "cycle-detected"


class MissingWidgetError(RigError):
    code = "missing-widget"


class MirroredSideLockedError(RigError):
    """Attempted to move a right-side widget whose mirror link is active."""

    code = "mirrored-side-locked"


class UnknownPartError(RigError):
    code = "unknown-part"


class MissingPartError(RigError):
    code = "missing-part"


class InvalidTemplateError(RigError):
    code = "invalid-template"


class SchemaError(RigError):
    """A document failed schema validation; ``path`` is a JSON-pointer-ish location."""

    code = "schema-violation"

    def __init__(self, message: str, path: str = "/"):
        super().__init__(f"{path}: {message}")
        self.path = path


class TypeMismatchError(RigError):
    code = "type-mismatch"


class PortOccupiedError(RigError):
    code = "port-occupied"


class UnknownPortError(RigError):
    code = "unknown-port"


class MissingControlError(RigError):
    code = "missing-control"


class SolverError(RigError):
    code = "solver-error"


class DegeneratePoleError(SolverError):
    """Pole point collinear with the root->target line; bend plane is undefined."""

    code = "degenerate-pole"


class ZeroLengthTargetError(SolverError):
    code = "zero-length-target"


class NonPositiveRestLengthError(SolverError):
    code = "nonpositive-rest-length"


class DegenerateCurveError(SolverError):
    code = "degenerate-curve"


class UnreachablePoseError(SolverError):
    """An FK pose cannot be represented by the IK chain (stretch disabled)."""

    code = "unreachable-pose"
