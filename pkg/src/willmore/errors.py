"""Exception types shared across the package."""


class WillmoreError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(WillmoreError):
    pass


class NullDirection(WillmoreError):
    """Gram-Schmidt hit a vector whose self-pairing is numerically null."""


class PoleOrderMismatch(WillmoreError):
    pass


class DivisionByZeroJet(WillmoreError):
    pass


class NonpositiveBranch(WillmoreError):
    """sqrt/log of a jet whose constant term is zero."""


class ParameterDomain(WillmoreError):
    pass


class NoNontrivialSolution(WillmoreError):
    pass


class InconsistentTargets(WillmoreError):
    pass


class NonzeroResidue(WillmoreError):
    pass


class NotConformal(WillmoreError):
    pass


class DegenerateSurface(WillmoreError):
    pass


class BranchPoint(WillmoreError):
    """Degenerate induced metric: canonical lift undefined."""


class DegenerateV(WillmoreError):
    """Mean-curvature-sphere subspace has rank below 4."""


class NotNormal(WillmoreError):
    pass


class QuadratureNonconvergent(WillmoreError):
    pass


class UmbilicPoint(WillmoreError):
    pass


class GridTooCoarse(WillmoreError):
    pass


class BlowUp(WillmoreError):
    """Riccati solution crossed a pole inside the grid."""


class NotImmersed(WillmoreError):
    pass


class SpanDeficit(WillmoreError):
    pass


class RankDrop(WillmoreError):
    pass


class RankCollapse(WillmoreError):
    def __init__(self, step, message=""):
        self.step = step
        super().__init__(message or f"rank collapse at chain step {step}")


class SingularSetHit(WillmoreError):
    pass


class TotallyIsotropicInput(WillmoreError):
    pass


class NotTotallyIsotropic(WillmoreError):
    pass


class SchemaError(WillmoreError):
    """Document violates the JSON schema (unknown field, bad version, ...)."""
