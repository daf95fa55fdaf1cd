class ModescopeError(Exception):
    """Base class for errors raised by modescope."""


class InvalidInputError(ModescopeError, ValueError):
    pass


class ParameterError(ModescopeError, ValueError):
    """A tuning constant is outside the range where the construction is defined."""


class InsufficientDataError(ModescopeError, ValueError):
    pass


class DegenerateScaleError(ModescopeError, ArithmeticError):
    """A subsection whose end points have equal projected distance."""


class DataParseError(ModescopeError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
