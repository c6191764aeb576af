"""Exception types shared across the package."""

from __future__ import annotations


class LrtsError(Exception):
    """Base class for all package errors."""


class DomainError(LrtsError):
    """An argument lies outside its admissible domain (x < 0, z outside U, ...)."""


class PositivityError(DomainError):
    """A denominator or discount bound that must stay positive failed to.

    Carries an approximate witness location when one is known.
    """

    def __init__(self, message: str, witness: float | None = None,
                 state=None) -> None:
        super().__init__(message)
        self.witness = witness
        self.state = state


class DegenerateManifoldError(LrtsError):
    """The coordinate curves are linearly dependent (rank below d)."""


class UnsupportedManifoldError(LrtsError):
    """The operation needs a matrix-generated, normalized manifold."""


class IllPosedFitError(LrtsError):
    """The least-squares design matrix is rank deficient."""


class QuadratureError(LrtsError):
    """Adaptive quadrature failed to converge; best estimate attached."""

    def __init__(self, message: str, estimate: float | None = None) -> None:
        super().__init__(message)
        self.estimate = estimate


class SchemaError(LrtsError):
    """A configuration file or CLI argument failed validation."""
