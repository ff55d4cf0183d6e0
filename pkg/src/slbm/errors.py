"""Exception types shared across the package."""


class SlbmError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SlbmError):
    """Invalid configuration value or unusable geometry."""


class NumericalInstabilityError(SlbmError):
    """The solver produced a non-positive or non-finite density."""


class FormatError(SlbmError):
    """Malformed input file: bad magic, truncation, or inconsistent sizes."""


class ProtocolError(SlbmError):
    """A ghost-exchange message did not match the receiver's registry."""


class EmptyBlockError(SlbmError):
    """A block contains no fluid cells and should be discarded."""


class UnreachablePorosityError(SlbmError):
    """Random sphere insertion cannot reach the requested porosity."""
