"""Exception hierarchy shared by every module.

Each class carries the CLI exit code it maps to, so the command line layer
never has to know which module raised.
"""

from __future__ import annotations


class ZeroRectError(Exception):
    exit_code = 1


class BadInput(ZeroRectError):
    exit_code = 4


class UniverseMismatch(BadInput):
    pass


class InvalidLambda(BadInput):
    pass


class InvalidParams(BadInput):
    pass


class InvalidProbability(BadInput):
    pass


class InvalidPrime(BadInput):
    pass


class InvalidFrequency(BadInput):
    pass


class EmptyFamily(BadInput):
    pass


class PreconditionFailed(BadInput):
    pass


class TooDense(PreconditionFailed):
    pass


class ZeroVariance(PreconditionFailed):
    pass


class DensityTooLow(PreconditionFailed):
    pass


class NoDisjointPairs(PreconditionFailed):
    pass


class EmptyResult(PreconditionFailed):
    pass


class BudgetExceeded(ZeroRectError):
    exit_code = 3


class VerificationFailure(ZeroRectError):
    """A returned object failed its own post-hoc certificate."""

    exit_code = 2


class RankContradiction(VerificationFailure):
    """An induced matching larger than the rank was built; the rank was understated."""


class ConstantsFalsified(VerificationFailure):
    """Exhaustive search found no half certifying either outcome of the halving step."""

    def __init__(self, message, *, p=None, q=None, shape=None):
        super().__init__(message)
        self.p = p
        self.q = q
        self.shape = shape


class ProgressViolation(VerificationFailure):
    pass


class NumericalFailure(ZeroRectError):
    exit_code = 2

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class Exhausted(ZeroRectError):
    """Randomized search ran out of attempts. Not a disproof of anything."""

    exit_code = 0

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats or {}
