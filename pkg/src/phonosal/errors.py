"""Exception hierarchy shared by all phonosal modules."""


class PhonosalError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(PhonosalError):
    """Malformed input file (WAV container, TextGrid, CSV, checkpoint)."""


class UnsupportedCodecError(FormatError):
    """WAV file uses an encoding other than PCM16."""


class TooShortError(PhonosalError):
    """Signal shorter than one analysis frame."""


class DimensionError(PhonosalError):
    """Array shape inconsistent with what the operation expects."""


class MethodMismatchError(PhonosalError):
    """Explanation method applied to an incompatible architecture."""


class SplitError(PhonosalError):
    """Corpus cannot be split as requested."""


class ConstructionError(PhonosalError):
    """Test utterances cannot be assembled from the catalog."""


class ValidationError(PhonosalError):
    """Parsed annotation violates an invariant (overlap, order, label)."""


class PreconditionError(PhonosalError):
    """Caller violated a documented precondition."""


class DivergenceError(PhonosalError):
    """Training produced a non-finite loss."""
