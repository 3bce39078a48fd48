"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Base class for all input/state validation failures."""


class ConfigError(ValidationError):
    """Malformed or unknown configuration input."""


class LayoutError(ValidationError):
    """Device layout constraint violated (occupancy, coupling validity)."""


class TrainFormatError(ValidationError):
    """Bit-train file cannot be parsed or fails its consistency checks."""


class CompileError(ValidationError):
    """Pulse sequence cannot be lowered to a bit train."""
