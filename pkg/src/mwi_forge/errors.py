"""Exception types shared across the package."""


class ForgeError(Exception):
    pass


class OutOfLattice(ForgeError):
    pass


class EmptySlab(ForgeError):
    pass


class NotGloballyHyperbolic(ForgeError):
    pass


class DegreeOverflow(ForgeError):
    pass


class CutoffTooSmall(ForgeError):
    """Raised when a test function is not identically 1 where it must be."""

    def __init__(self, message, uncovered=()):
        super().__init__(message)
        self.uncovered = frozenset(uncovered)


class SingularLinearPart(ForgeError):
    pass


class ContextMismatch(ForgeError):
    pass


class SideConditionFailed(ForgeError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotALagrangianSymmetry(ForgeError):
    pass


class InconsistentPresentation(ForgeError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SupportOutsideRegion(ForgeError):
    pass


class DisagreementAcrossApproximants(ForgeError):
    pass


class InvalidSplit(ForgeError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class OnLightCone(ForgeError):
    pass


class QuadratureNotConverged(ForgeError):
    pass


class NotTimelike(ForgeError):
    pass


class InequalityViolated(ForgeError):
    pass


class UncertifiedChain(ForgeError):
    pass


class ScenarioError(ForgeError):
    pass
