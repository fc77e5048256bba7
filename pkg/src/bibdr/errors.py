"""Exception types shared across the package."""


class BibdrError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefinite(BibdrError):
    """A matrix required to be positive definite failed factorization."""


class InvalidShape(BibdrError):
    """A distribution was requested with an invalid shape parameter."""


class InvalidSimplex(BibdrError):
    """A probability vector had negative entries or a non-positive sum."""


class InvalidRange(BibdrError):
    """A spatial range parameter was non-positive."""


class TooManyKnots(BibdrError):
    """More knots requested than distinct sites available."""


class DimensionMismatch(BibdrError):
    """Array dimensions are inconsistent with the model layout."""


class ConfigError(BibdrError):
    """Run configuration is invalid."""


class SchemaError(BibdrError):
    """An input file does not match its documented column schema."""
