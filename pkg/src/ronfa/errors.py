"""Exception types raised by the engine."""


class RonfaError(Exception):
    """Base class for all engine errors."""


class FormatError(RonfaError):
    """Malformed embedding file (bad magic, truncation, bad row shape)."""


class ValidationError(RonfaError):
    """Data violates a structural invariant (bad class index, non-finite value, noise quota)."""


class CapacityError(RonfaError):
    """Not enough classes, items, or pool vectors to satisfy a request."""


class ConfigError(RonfaError):
    """Invalid or inconsistent configuration."""


class DegenerateClassError(RonfaError):
    """A task class has no support items under its given label."""


class DegenerateClusterError(RonfaError):
    """A cluster received zero total assignment weight."""
