"""Exception and warning types shared across the pipeline."""


class PhysioFuseError(Exception):
    """Base class for all errors raised by this package."""


# --- ingest -----------------------------------------------------------------

class EdfError(PhysioFuseError):
    pass


class TruncatedHeader(EdfError):
    pass


class InvalidField(EdfError):
    pass


class DegenerateCalibration(EdfError):
    pass


class UnknownLabel(PhysioFuseError):
    pass


class CsvError(PhysioFuseError):
    pass


class RaggedRows(CsvError):
    pass


class NonNumericCell(CsvError):
    def __init__(self, row, column, cell):
        self.row = row
        self.column = column
        self.cell = cell
        super().__init__(f"non-numeric cell {cell!r} at row {row}, column {column!r}")


class EmptyFile(CsvError):
    pass


class InfeasibleCoupling(PhysioFuseError):
    pass


# --- generic input checks ---------------------------------------------------

class EmptyInput(PhysioFuseError, ValueError):
    pass


class LengthMismatch(PhysioFuseError, ValueError):
    pass


class TooShort(PhysioFuseError, ValueError):
    pass


class WidthMismatch(PhysioFuseError, ValueError):
    pass


# --- preprocess / segmentation ----------------------------------------------

class NonPositiveRate(PhysioFuseError, ValueError):
    pass


class BandOutOfRange(PhysioFuseError, ValueError):
    pass


class OutOfRangeKss(PhysioFuseError, ValueError):
    pass


class MixedRates(PhysioFuseError):
    pass


class NoChannels(PhysioFuseError):
    pass


# --- features / dataset -----------------------------------------------------

class LagTooLarge(PhysioFuseError, ValueError):
    pass


class MissingChannel(PhysioFuseError):
    pass


class InfeasibleCombination(PhysioFuseError):
    pass


class SingleClass(PhysioFuseError):
    pass


class TooFewSessions(PhysioFuseError):
    pass


# --- models / explain -------------------------------------------------------

class NonFinite(PhysioFuseError, ArithmeticError):
    pass


class MissingCover(PhysioFuseError):
    pass


class UnknownLabelIndex(PhysioFuseError, ValueError):
    """A label is outside ``0..K-1`` for a K-column probability matrix."""


# --- cli --------------------------------------------------------------------

class ConfigInvalid(PhysioFuseError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class MissingManifest(PhysioFuseError):
    pass


class MalformedArtifact(PhysioFuseError):
    def __init__(self, path, detail):
        self.path = str(path)
        super().__init__(f"{path}: {detail}")


class StageError(PhysioFuseError):
    """Wraps a failure with the pipeline stage and input key that produced it."""

    def __init__(self, stage, key, cause):
        self.stage = stage
        self.key = key
        self.cause = cause
        super().__init__(f"[{stage}] {key}: {type(cause).__name__}: {cause}")


# --- non-fatal flags --------------------------------------------------------

class PhysioFuseWarning(UserWarning):
    pass


class ConstantChannel(PhysioFuseWarning):
    pass


class DegeneratePair(PhysioFuseWarning):
    pass


class UnknownLabelWarning(PhysioFuseWarning):
    pass


class UndefinedPrecision(PhysioFuseWarning):
    pass


class DroppedSegments(PhysioFuseWarning):
    pass
