"""Exception types shared across the package."""


class SourceScopeError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(SourceScopeError):
    """Two grid objects with incompatible node counts were combined."""


class InputError(SourceScopeError):
    """An argument violates a documented precondition."""


class RangeError(SourceScopeError):
    """A requested time or index lies outside the simulated horizon."""


class DataError(SourceScopeError):
    """A measurement stream is missing a required index."""


class ModelError(SourceScopeError):
    """A source model violates an assumption of the recovery theory."""


class ScenarioError(SourceScopeError):
    """A scenario file failed to parse or violates a named constraint."""


class CertificateError(SourceScopeError):
    """A bound certificate was requested outside its applicability gate."""
