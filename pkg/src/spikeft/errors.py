"""Exception hierarchy shared by all modules."""


class SpikeFTError(Exception):
    """Base class for every error raised by spikeft."""


class DomainError(SpikeFTError, ValueError):
    """A physical or numerical parameter lies outside its valid domain."""


class UsageError(SpikeFTError, ValueError):
    """Invalid name, option or argument combination."""


class SizeError(SpikeFTError, ValueError):
    """Transform size not supported by the requested operation."""


class RangeError(SpikeFTError, ValueError):
    """An input value exceeds the encoder range."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ParseError(SpikeFTError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class FormatError(SpikeFTError, ValueError):
    pass


class ConsistencyError(SpikeFTError, ValueError):
    """A spike lies outside the window of the stage it claims to belong to."""


class ModeError(SpikeFTError, ValueError):
    pass


class PrematureSpikeError(SpikeFTError):
    """A membrane reached threshold before the end of the silent stage."""

    def __init__(self, message, neuron=None, step=None):
        super().__init__(message)
        self.neuron = neuron
        self.step = step


class CapacityError(SpikeFTError):
    """A plan cannot be mapped onto the hardware number ranges."""
