"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, failed checks
exit 2, numerical failures (Newton, ellipticity, shocks) exit 3.
"""


class RigidvesError(Exception):
    """Base class for all package errors."""


class GridUnderresolvedError(RigidvesError):
    """Grid too small for the requested stencil."""


class ExactResidualError(RigidvesError):
    """A residual is exactly zero (or invalid): no order can be fitted."""


class EmptyRegionError(RigidvesError):
    """A reduction was requested over an empty unmasked region."""


class DomainError(RigidvesError):
    """Evaluation requested outside a structure's declared domain."""


class DegenerateFiberError(RigidvesError):
    """Ellipticity 4*alpha - beta**2 > 0 violated at some point."""


class NotInvertibleError(RigidvesError):
    """Zero element of a fiber algebra has no inverse."""


class EllipticityError(RigidvesError):
    """Im(lambda) <= 0 or |mu| >= 1 where the upper half-plane / disk is required."""


class StructureMismatchError(RigidvesError):
    """A section and a spectral field do not belong to the same structure/grid."""


class NonRigidStructureError(RigidvesError):
    """Reduction refused: the structure failed the rigidity gate.

    Carries the transport diagnostics so the refusal is reportable.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class NearShockError(RigidvesError):
    """|J| fell below J_min during Newton iteration."""


class NewtonConvergenceError(RigidvesError):
    """Newton iteration did not reach tolerance within max_iter."""


class EllipticityLostError(RigidvesError):
    """A converged Burgers solution left the upper half-plane."""


class NoInitialColumnError(RigidvesError):
    """The grid contains no x = 0 column and no transversal column was declared."""


class InversionError(RigidvesError):
    """Newton inversion of the canonical coordinate failed."""


class NearSingularChartError(RigidvesError):
    """Chart Jacobian below threshold at the point being inverted."""


class AxisAbsentError(RigidvesError):
    """The grid does not contain the x = 0 column."""


class SeedError(RigidvesError):
    """Base class for seed-expression problems."""


class SeedSyntaxError(SeedError):
    """Malformed seed expression; carries the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifierError(SeedError):
    """Expression used a name that is neither a variable nor a declared parameter."""


class SingularEvaluationError(SeedError):
    """Division by zero or log/sqrt singularity hit during evaluation."""

    def __init__(self, message, at=None):
        if at is not None:
            message = f"{message} at w = {at}"
        super().__init__(message)
        self.at = at
