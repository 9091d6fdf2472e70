"""Exception types shared across the package.

Everything user-facing raises one of these; plain ValueError/TypeError are
reserved for genuine programming errors.
"""


class RavenError(Exception):
    """Base class for all package errors."""


class ValidationError(RavenError, ValueError):
    """Bad user input (CLI arguments, malformed requests)."""


class DomainExhausted(RavenError):
    """No value/assignment exists that satisfies a rule in the given domain."""


class GenerationRetryExceeded(RavenError):
    """Puzzle (or candidate-set) generation hit the resampling cap."""


class AmbiguousTie(RavenError):
    """Oracle scoring produced no strict argmax over the candidates."""


class UnsupportedSize(RavenError, ValueError):
    """Raster size is not one of the supported square sizes."""


class FormatError(RavenError):
    """On-disk artifact has a bad magic number or inconsistent layout."""


class ShapeMismatch(RavenError, ValueError):
    """Tensor operands have incompatible shapes."""


class NotScalar(RavenError, ValueError):
    """backward() was started from a non-scalar tensor."""


class BadAxis(RavenError, ValueError):
    """Reduction or structural op got an out-of-range axis."""


class BadIndex(RavenError, ValueError):
    """Gather/select got an out-of-range index."""


class MissingGrad(RavenError):
    """Optimizer step found a tracked parameter without a gradient."""


class MissingMeta(RavenError):
    """Meta-mode training was asked to run without rule annotations."""


class TooFew(RavenError, ValueError):
    """Dataset too small to split into train/val/test."""


class EmptyAfterFilter(RavenError):
    """A dataset filter (e.g. rule holdout) removed every instance."""
