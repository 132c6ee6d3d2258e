"""Exception types raised across the package."""


class ShearStabError(Exception):
    """Base class; carries an optional ``operation`` tag for the CLI."""

    operation = "shearstab"


class DomainError(ShearStabError, ValueError):
    pass


class UnsupportedEvaluationError(ShearStabError):
    pass


class RootNotFoundError(ShearStabError):
    def __init__(self, message, last=None, trace=None):
        super().__init__(message)
        self.last = last
        self.trace = trace or []


class SingularIntegrationError(ShearStabError):
    pass


class IntegrationError(ShearStabError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class AiryOverflowError(ShearStabError, OverflowError):
    pass


class BranchError(ShearStabError):
    pass


class NormalizationError(ShearStabError):
    pass


class DegenerateEigenvalueError(ShearStabError):
    pass


class NearSingularSolveError(ShearStabError):
    pass


class DegeneratePairingError(ShearStabError):
    pass


class ContinuationError(ShearStabError):
    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class InvalidCarrierError(ShearStabError, ValueError):
    pass


class InfeasibleError(ShearStabError):
    pass


class InconsistentScenarioError(ShearStabError):
    pass


class SuperViscousError(ShearStabError, ValueError):
    pass


class ExpansionTruncationError(ShearStabError):
    pass
