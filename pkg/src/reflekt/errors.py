"""Exception hierarchy.

Numerical failures (caps exceeded, non-convergence) derive from
:class:`NumericalFailure` so the CLI can map them to a single exit code.
"""


class ReflektError(Exception):
    pass


class NormalizationError(ReflektError, ValueError):
    """A vector that must be unit norm is not."""


class UnsupportedGroupError(ReflektError, ValueError):
    pass


class NotInChamberError(ReflektError, ValueError):
    pass


class DimensionCapError(ReflektError, ValueError):
    pass


class PropertyAViolation(ReflektError, ValueError):
    """The orbit-hull precondition fails for the supplied set or epigraph."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class CharacterizationFailure(ReflektError, AssertionError):
    """Both sides of a chamber characterization disagree.

    ``counterexample`` is a JSON-serializable dict describing the inputs
    and the two verdicts.
    """

    def __init__(self, message, counterexample=None):
        super().__init__(message)
        self.counterexample = counterexample or {}


class OracleViolationError(ReflektError, RuntimeError):
    """A set oracle returned points that are not valid projections."""


class NumericalFailure(ReflektError, RuntimeError):
    pass


class GroupTooLargeError(NumericalFailure):
    pass


class StabilizerMismatchError(NumericalFailure):
    pass


class IterationCapError(NumericalFailure):
    pass


class DykstraNonconvergence(NumericalFailure):
    pass


class DivergenceError(NumericalFailure):
    pass
