class CoherenceError(Exception):
    """Base class for every error raised by povm_coherence."""


class NotHermitian(CoherenceError, ValueError):
    pass


class NotPSD(CoherenceError, ValueError):
    pass


class NoConvergence(CoherenceError, RuntimeError):
    pass


class DimMismatch(CoherenceError, ValueError):
    pass


class InvalidState(CoherenceError, ValueError):
    """A constructor received data violating its type invariants."""


class DegenerateSample(CoherenceError, RuntimeError):
    pass


class SupportViolation(CoherenceError, ValueError):
    pass


class BadAlpha(CoherenceError, ValueError):
    pass


class MalformedInput(CoherenceError, ValueError):
    pass


class CompletionFailure(CoherenceError, RuntimeError):
    pass


class SolverFailure(CoherenceError, RuntimeError):
    """
    An optimization did not meet its stopping criteria.

    Attributes:
        outcome: The best iterate reached before giving up (a SolverOutcome),
          or None when the solver produced nothing usable.
    """

    def __init__(self, message: str, outcome=None):
        super().__init__(message)
        self.outcome = outcome


class NegativeMeasure(CoherenceError, ArithmeticError):
    """A measure evaluated clearly below zero, beyond the clamping window."""
