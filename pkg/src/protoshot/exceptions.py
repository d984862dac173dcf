"""Error taxonomy. Exit codes: 1 usage, 2 data validation, 3 numeric failure."""


class ProtoshotError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class UsageError(ProtoshotError):
    """Bad invocation: unknown flags, missing arguments, malformed overrides."""

    exit_code = 1


class ConfigError(UsageError):
    """Unknown configuration key or a value outside its allowed range."""


class DataValidationError(ProtoshotError):
    """Input data failed validation (file content, splits, hierarchy, sampling)."""

    exit_code = 2


class EmbeddingFormatError(DataValidationError):
    """Embedding file could not be parsed; message names file and line."""


class SplitError(DataValidationError):
    """Split file overlaps or references labels absent from the data."""


class HierarchyError(DataValidationError):
    """Hierarchy violates the rooted equal-depth tree contract."""


class SamplingError(DataValidationError):
    """Episode request cannot be satisfied by the available classes/samples."""


class NumericError(ProtoshotError):
    """Numeric failure: invalid manifold points, singular gradients, failed checks."""

    exit_code = 3


class GeometryError(NumericError):
    """Invalid point, curvature or dimension for a manifold operation."""


class CoincidentPointsError(GeometryError):
    """Distance gradient requested at coincident points."""


class GradientError(NumericError):
    """Gradient evaluation failed or a gradient check exceeded its threshold."""
