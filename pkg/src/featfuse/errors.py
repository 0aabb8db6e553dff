"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class FeatFuseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FeatFuseError):
    """Invalid or inconsistent experiment configuration."""


class DataError(FeatFuseError):
    """Malformed, misaligned, or degenerate input data."""


class AlignmentError(DataError):
    """Sample ids or row counts do not line up across data sources."""


class EncodingError(DataError):
    """Metadata value cannot be encoded (non-ASCII byte)."""


class EmptyInputError(DataError):
    """An operation received an empty table or matrix."""


class StructuralError(DataError):
    """A serialized container violates its own layout rules."""


class MagicMismatchError(StructuralError):
    """File does not start with the expected magic bytes."""


class TruncatedFileError(StructuralError):
    """File ends before the declared payload is complete."""


class ChecksumError(StructuralError):
    """Payload checksum does not match the stored CRC-32."""


class DegenerateSplitError(DataError):
    """Requested split leaves the train or test side empty."""


class ShapeMismatchError(DataError):
    """Matrix dimensions are incompatible with the model or operation."""


class DegenerateInputError(DataError):
    """Design matrix has no feature columns and no intercept-only mode."""


class UndefinedRocError(DataError):
    """ROC analysis requested with only one class present."""


class ComparabilityError(DataError):
    """Two reports cannot be compared (different classes or test split)."""


class NumericError(FeatFuseError):
    """Numeric failure during training or evaluation."""


class DivergenceError(NumericError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class NonFiniteError(NumericError):
    """Input contains NaN or infinity where finite values are required."""
