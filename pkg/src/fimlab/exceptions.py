"""Exception hierarchy shared by every fimlab module."""


class FimlabError(Exception):
    """Base class for all library errors."""


class NotPositiveDefinite(FimlabError, ValueError):
    """A Cholesky pivot was non-positive (degenerate information matrix)."""


class NonFiniteEvaluation(FimlabError, FloatingPointError):
    """A function probe returned nan or inf."""


class DegenerateMixture(FimlabError, ValueError):
    """A mixture density underflowed to zero at some observation."""


class SingularInnovation(FimlabError, ValueError):
    """Kalman innovation variance was not strictly positive."""


class SingularHessian(FimlabError, ValueError):
    """Newton step could not be formed and the gradient fallback also failed."""


class NotConverged(FimlabError, RuntimeError):
    """Solver exhausted its iteration budget.

    The best point found is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InvalidDistribution(FimlabError, ValueError):
    """Perturbation distribution violates symmetry/boundedness/moment rules."""


class ZeroPerturbationComponent(FimlabError, ZeroDivisionError):
    """A perturbation vector has an exactly zero entry."""


class NotIndependentData(FimlabError, ValueError):
    """Per-observation decomposition requested for a dependent-data model."""


class ZeroReference(FimlabError, ZeroDivisionError):
    """Relative error requested against a zero reference matrix."""


class EmptyCandidates(FimlabError, ValueError):
    """typical_outcome called with no candidates."""


class ReplicationFailure(FimlabError, RuntimeError):
    """Too many Monte Carlo replications failed."""

    def __init__(self, message, failures=0, total=0):
        super().__init__(message)
        self.failures = failures
        self.total = total


class UnknownExperiment(FimlabError, KeyError):
    pass


class InvalidOverride(FimlabError, ValueError):
    pass


class IoFailure(FimlabError, OSError):
    """An output file could not be written."""
