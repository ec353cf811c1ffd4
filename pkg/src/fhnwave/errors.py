"""Exceptions raised when a rigorous computation cannot be carried out.

A failed inequality is never an exception: checks return objects with
``passed=False``. These errors mean the enclosure itself could not be produced.
"""

from __future__ import annotations


class ProofError(Exception):
    """Base class of every fhnwave error.

    Args:
        message: Human readable description.
        cell: Index of the offending cell in a batched computation, if known.
    """

    def __init__(self, message: str, *, cell: int | None = None) -> None:
        super().__init__(message)
        self.cell = cell


class DivisionByZeroInterval(ProofError, ZeroDivisionError):
    """The divisor interval contains zero."""


class SingularEnclosure(ProofError):
    """Every pivot candidate of an interval matrix contains zero."""


class NoEnclosure(ProofError):
    """The rough enclosure iteration did not validate; the step must shrink."""


class StepUnderflow(ProofError):
    """The step size fell below the smallest admissible value."""


class NoCrossing(ProofError):
    """The flow did not reach the destination section within the limits."""


class TransversalityUnverified(ProofError):
    """The sign of the normal flux over the crossing enclosure is not definite."""


class EnclosureBlowup(ProofError):
    """The hull of a propagated set exceeded the configured width."""


class MapFailure(ProofError):
    """A section map could not be enclosed for some cell of a covering check."""


class NewtonDiverged(ProofError):
    """A float Newton iteration stopped decreasing the residual."""


class NoSignChange(ProofError):
    """A bisection bracket has equal signs at both ends."""


class TwistedTargetWarning(UserWarning):
    """A covering was requested onto an h-set without an affine chart."""


__all__ = [
    "DivisionByZeroInterval",
    "EnclosureBlowup",
    "MapFailure",
    "NewtonDiverged",
    "NoCrossing",
    "NoEnclosure",
    "NoSignChange",
    "ProofError",
    "SingularEnclosure",
    "StepUnderflow",
    "TransversalityUnverified",
    "TwistedTargetWarning",
]
