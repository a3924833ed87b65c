"""Exception hierarchy. The CLI maps these onto exit codes."""


class SbigaError(Exception):
    """Base class for all library errors."""


class DomainError(SbigaError, ValueError):
    """Parameter outside [0, 1] or otherwise outside an operation's domain."""


class KnotVectorError(SbigaError, ValueError):
    """Knot vector violates the open/non-decreasing/multiplicity rules."""


class RefinementError(SbigaError, ValueError):
    """Knot insertion would exceed the admissible multiplicity."""


class DegenerateRequestError(SbigaError, ValueError):
    """More derivatives requested than the degree supports."""


class StructureError(SbigaError):
    """Operation requires structure the map does not have (SB, straight rays, closed curve)."""


class ConstraintError(SbigaError):
    """Edit touches a control point that must stay fixed."""


class RegularityError(SbigaError):
    """Non-positive Jacobian determinant where a regular map is required."""


class AssemblyError(SbigaError):
    """Non-finite integrand sample during assembly."""


class SolverError(SbigaError):
    """Linear solve failed or missed the residual contract."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DefectError(SbigaError):
    """Hamiltonian spectrum cannot be paired / is defective beyond the zero mode."""


class ConditioningError(SbigaError):
    """Modal matching system too ill-conditioned to trust."""


class SchemaError(SbigaError, ValueError):
    """Geometry or curve document failed validation."""
