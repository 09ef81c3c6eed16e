class ChowlaLabError(Exception):
    """Base class for all errors raised by this package."""


class RangeError(ChowlaLabError, ValueError):
    pass


class CapabilityError(ChowlaLabError):
    """A request exceeds what the sieve or a search budget can serve."""


class BoundViolation(ChowlaLabError, ValueError):
    pass


class UnsupportedFunction(ChowlaLabError, TypeError):
    pass


class SpecParseError(ChowlaLabError, ValueError):
    def __init__(self, message, text="", pos=0):
        self.text = text
        self.pos = pos
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.line, self.column = line, col
        super().__init__(f"{message} at line {line}, column {col}")


class EpsilonTooLarge(ChowlaLabError, ValueError):
    pass


class StraighteningFailed(ChowlaLabError):
    pass


class ConfigError(ChowlaLabError, ValueError):
    pass
