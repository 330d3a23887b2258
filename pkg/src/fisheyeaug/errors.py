"""Exception types shared across the package."""


class FisheyeAugError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FisheyeAugError):
    """Invalid configuration value, policy file, or constructor argument."""


class IncidenceOutOfRange(FisheyeAugError):
    """Incidence angle at or beyond pi/2: the ray cannot hit the source plane."""


class DimensionMismatch(FisheyeAugError):
    """Raster dimensions do not match what the operation was compiled for."""


class UnknownPreset(ConfigError):
    """Augmentation preset name is not one of the known presets."""


class MissingLabel(FisheyeAugError):
    """An image file has no label partner in the dataset tree."""


class EmptySplit(FisheyeAugError):
    """The requested dataset split contains no image/label pairs."""


class ValueOutOfRange(FisheyeAugError):
    """A label raster contains values outside the allowed class-ID set."""


class NoDefinedClasses(FisheyeAugError):
    """No class has a defined IoU (empty or all-ignored accumulation)."""
