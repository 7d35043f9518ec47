"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class QumodeGibbsError(Exception):
    """Base class for every error raised by this package."""


class CapacityError(QumodeGibbsError):
    """A requested register or matrix exceeds the configured memory budget."""


class ShapeError(QumodeGibbsError, ValueError):
    """Operands have incompatible dimensions."""


class DomainError(QumodeGibbsError, ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class ValidationError(QumodeGibbsError, ValueError):
    """An input object violates its invariants (hermiticity, unitarity, ...)."""


class NumericalError(QumodeGibbsError, ArithmeticError):
    """A numerical routine failed to converge or produced unusable output."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class PostSelectionError(NumericalError):
    """The qumode post-selection succeeded with vanishing probability."""


class ConfigError(QumodeGibbsError, ValueError):
    """Experiment configuration is malformed or contains unknown keys."""
