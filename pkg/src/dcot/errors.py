"""Exception types raised by the dcot package.

Every failure mode has a distinct class so callers (and the CLI) can react
to specific conditions without string matching.
"""


class DcotError(Exception):
    """Base class for all dcot errors."""


# -- corpus / vocabulary ------------------------------------------------

class EmptyVocabulary(DcotError):
    """No token survived the minimum-count threshold."""


class InvalidPrototypeCount(DcotError):
    """Requested prototype count is not a strict, non-empty subset size."""


# -- encoder ------------------------------------------------------------

class DimensionCap(DcotError):
    """Dense scatter matrix would exceed the configured dimension cap."""


class InvalidProbability(DcotError):
    """Survival probability outside (0, 1]."""


class IndexOutOfRange(DcotError):
    """A target/prototype index does not fit the matrix dimension."""


class SingularSystem(DcotError):
    """The linear system could not be solved; retry with ridge > 0."""


class NonFiniteResult(DcotError):
    """A computation produced NaN or infinity."""


class DimensionMismatch(DcotError):
    """Input vector length does not match the expected dimension."""


# -- explicit-corruption checks ------------------------------------------

class DimensionTooLarge(DcotError):
    """Exhaustive mask enumeration requested above the supported dimension."""


# -- evaluation ----------------------------------------------------------

class EmptyTrainingSet(DcotError):
    """Nearest-neighbour classification requires at least one training row."""


class LengthMismatch(DcotError):
    """Two aligned sequences have different lengths."""


class InsufficientLabels(DcotError):
    """Not enough labeled documents to run a split evaluation."""


# -- model persistence ----------------------------------------------------

class IoFailure(DcotError):
    """Underlying stream or file operation failed."""


class BadMagic(DcotError):
    """Stream does not start with the model-file magic bytes."""


class UnsupportedVersion(DcotError):
    """Model-file format version is not supported by this build."""


class TruncatedFile(DcotError):
    """Stream ended before the declared payload was complete."""


class InvariantViolation(DcotError):
    """Decoded model data violates a model invariant."""
