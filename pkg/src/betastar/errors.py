"""Typed errors shared by every module."""

from __future__ import annotations

from typing import Any


class BetaStarError(Exception):
    """Base class for all library errors."""


class ParameterError(BetaStarError, ValueError):
    """A parameter lies outside the admissible range.

    The message names the violated inequality.
    """


class BoundExceeded(ParameterError):
    """A configured table bound was exceeded."""


class InfiniteExpectation(BetaStarError):
    """The requested expectation is infinite for these parameters."""


class QuadratureError(BetaStarError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Attributes:
        best: the best available ``QuadratureResult``.
    """

    def __init__(self, message: str, best: Any = None):
        super().__init__(message)
        self.best = best


class DegenerateInput(BetaStarError, ValueError):
    """Point set whose affine hull is not full-dimensional."""


class OriginNotInterior(BetaStarError, ValueError):
    """Operation needs the origin strictly inside the polytope."""


class FaceNotFound(BetaStarError, LookupError):
    """The requested vertex index set is not a face of the polytope."""
