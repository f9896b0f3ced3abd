"""Exception types shared across the toolkit."""


class CrossSegError(Exception):
    """Base class for all toolkit errors."""


# --- geometry ---

class ParallelSegments(CrossSegError):
    """Segments are parallel or cross at less than the minimum angle."""


class NoCrossing(CrossSegError):
    """The segments' lines meet, but outside one of the segments."""


class DegenerateArm(CrossSegError):
    """A cross arm is too short to be usable."""


class InvalidRate(CrossSegError):
    """Shrink rate outside [0, 1)."""


# --- masks / grids ---

class DimensionMismatch(CrossSegError):
    """Two grids that must share a shape do not."""


class EmptyMask(CrossSegError):
    """A mask required to be non-empty (or non-full) is not."""


class DuplicateCategory(CrossSegError):
    """The same category id appears twice where ids must be unique."""


# --- branching / scoring ---

class InsufficientData(CrossSegError):
    """Not enough usable values to calibrate thresholds."""


class NonFiniteLoss(CrossSegError):
    """A loss value is NaN or infinite."""


class NonFiniteInput(CrossSegError):
    """An input array contains NaN or infinite entries."""


class EmptyPseudoMask(CrossSegError):
    """Weighted averaging needs at least one positive mask pixel."""


class NoLabels(CrossSegError):
    """Partial loss called without any labelled pixel."""


class EmptyList(CrossSegError):
    """An aggregate metric called on an empty collection."""


# --- training ---

class ShapeMismatch(CrossSegError):
    """Model and feature dimensions disagree."""


class DivergenceDetected(CrossSegError):
    """Training loss became NaN/Inf; aborted with state snapshot."""


# --- io / service ---

class SchemaError(CrossSegError):
    """Annotation or manifest document violates the JSON schema."""


class BoundsError(CrossSegError):
    """Scribble endpoint outside the image rectangle."""


class GeometryError(CrossSegError):
    """A stored cross fails geometric validation."""


class IoError(CrossSegError):
    """File could not be read or written."""


class UnsupportedBitDepth(CrossSegError):
    """Mask file is not 8-bit grayscale."""


class MissingGt(CrossSegError):
    """Ground-truth masks required but not available."""


class VersionConflict(CrossSegError):
    """Optimistic-concurrency check failed on annotation save."""
