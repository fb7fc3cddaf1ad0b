"""Exception types raised across the package.

Everything derives from CrossphishError so callers can catch broadly; most
subclasses also inherit ValueError because they signal bad inputs.
"""


class CrossphishError(Exception):
    pass


class EmptyUrl(CrossphishError, ValueError):
    """URL is empty or whitespace-only."""


class ResolverUnavailable(CrossphishError, RuntimeError):
    """An online resolver was requested but cannot run (no network)."""


class MissingLabelColumn(CrossphishError, ValueError):
    """The configured label column is not present in the file."""


class DuplicateColumnName(CrossphishError, ValueError):
    """Two columns in a source file share a name."""


class EmptyFile(CrossphishError, ValueError):
    """A data file contains a header but no rows, or nothing at all."""


class UnmappedColumn(CrossphishError, ValueError):
    """A canonical feature has no mapping entry for this source."""


class AllMissingColumn(CrossphishError, ValueError):
    """A column is entirely missing, so no imputation statistic exists."""


class DegenerateClass(CrossphishError, ValueError):
    """A split or fit would leave some class with zero rows."""


class TooFewMinoritySamples(CrossphishError, ValueError):
    """SMOTE needs at least k+1 minority rows."""


class InsufficientRows(CrossphishError, ValueError):
    """Too few rows for the requested operation."""


class SchemaMismatch(CrossphishError, ValueError):
    """Feature names or order differ between two tables or a model/table pair."""


class LengthMismatch(CrossphishError, ValueError):
    """Paired arrays disagree in length."""


class TooManyFeatures(CrossphishError, ValueError):
    """Brute-force Shapley enumeration is capped at 12 features."""


class EmptyIntersection(CrossphishError, ValueError):
    """Two rankings share no feature names."""


class MissingImportance(CrossphishError, ValueError):
    """An importance file lacks a feature required for comparison."""


class UnknownModel(CrossphishError, ValueError):
    """Model kind string not recognized."""


class ConfigError(CrossphishError, ValueError):
    """A run configuration file is missing, malformed, or inconsistent."""
