"""Exception types shared across the package."""


class PerimeterPressureError(Exception):
    """Base class for all package errors."""


class RowSumError(PerimeterPressureError):
    """Outgoing turning ratios of a non-exit link do not sum to 1."""


class DanglingLinkError(PerimeterPressureError):
    """A non-exit link has no outgoing edges."""


class UnknownLinkError(PerimeterPressureError, KeyError):
    """A link id is not present in the graph."""


class DimensionMismatchError(PerimeterPressureError, ValueError):
    """A vector's length does not match the transition matrix size."""


class ParamError(PerimeterPressureError, ValueError):
    """A parameter is outside its valid range."""


class EmptyGroupError(PerimeterPressureError):
    """A demand origin/destination group has no links."""


class NoPathError(PerimeterPressureError):
    """No path exists between a trip's origin and destination."""


class ConfigError(PerimeterPressureError):
    """Inconsistent scenario configuration (e.g. feeder set mismatch)."""
