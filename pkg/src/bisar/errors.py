"""Exception types shared across the toolkit."""


class BisarError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(BisarError):
    """A constructed value violates one of its invariants."""


class ParseError(BisarError):
    """A file or byte stream does not match its declared format."""


class ConfigError(BisarError):
    """A run configuration is malformed or inconsistent."""


class DegenerateGeometry(BisarError):
    """Forward-scatter singularity: transmitter and receiver nearly antipodal."""


class ZeroField(BisarError):
    """A polarimetric operation received a zero electric field."""


class EmptySupport(BisarError):
    """No k-space samples remain for image formation."""


class ShapeMismatch(BisarError):
    """Array dimensions or clip metadata do not agree."""


class TooFewClips(BisarError):
    """Not enough training clips to build the requested model."""


class RankDeficient(BisarError):
    """Requested more components than the numerical rank of the data."""


class EmptySplit(BisarError):
    """Train/test partition left one side empty."""


class EmptyBin(BisarError):
    """An experiment bin contains no train or no test clips."""


class DegenerateLabels(BisarError):
    """ROC construction needs at least one positive and one negative example."""


class IoError(BisarError):
    """File could not be written or read back."""
