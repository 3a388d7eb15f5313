"""Exception hierarchy shared by every module."""


class ConinvError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(ConinvError, ValueError):
    pass


class SingularMatrixError(ConinvError):
    """Linear part failed the reciprocal-condition gate."""


class EigenSolverError(ConinvError):
    pass


class IllConditionedError(ConinvError):
    """Numerical rank or eigenvalue grouping could not be decided."""


class BorderlineSpectrumError(IllConditionedError):
    """An eigenvalue sits near 1 without clustering into the unipotent block."""


class NotUnipotentError(ConinvError, ValueError):
    pass


class NotNilpotentError(ConinvError, ValueError):
    pass


class BranchCutError(ConinvError):
    """Spectrum touches the closed negative real axis."""


class NotConinvolutionError(ConinvError, ValueError):
    pass


class InconsistentSystemError(ConinvError):
    pass


class InvalidWitnessError(ConinvError, ValueError):
    pass


class CReversibilityRequired(ConinvError):
    """The linear part is not c-reversible, so no two-factor split exists."""


class WitnessRejected(CReversibilityRequired):
    """The consimilarity witness does not make the transformed map c-reversible."""


class DeterminantModulusNotOne(ConinvError):
    """Coninvolutions have unimodular determinant; so do their products."""


class NonScalarRequired(ConinvError, ValueError):
    pass


class RetriesExhausted(ConinvError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals
