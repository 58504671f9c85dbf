"""Exception hierarchy.

Every error raised by the library derives from :class:`MarkovIOError`.  The
three intermediate classes decide the CLI exit code: input/structure problems
(2), numerical failures (3) and I/O failures (4).
"""


class MarkovIOError(Exception):
    exit_code = 1


class ValidationError(MarkovIOError, ValueError):
    exit_code = 2


class NumericalError(MarkovIOError, ArithmeticError):
    exit_code = 3


class IoError(MarkovIOError, OSError):
    exit_code = 4


# input / structure
class InvalidFlow(ValidationError):
    pass


class UnknownNode(ValidationError):
    pass


class TooSmall(ValidationError):
    pass


class DimensionError(ValidationError):
    pass


class MixedYears(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateKey(ValidationError):
    pass


class DegenerateYear(ValidationError):
    pass


class PanelInconsistent(ValidationError):
    pass


class KeyMismatch(ValidationError):
    def __init__(self, message, missing_in_network=(), missing_in_gdp=()):
        self.missing_in_network = tuple(missing_in_network)
        self.missing_in_gdp = tuple(missing_in_gdp)
        super().__init__(message)


class InsufficientHistory(ValidationError):
    pass


class DanglingNode(ValidationError):
    def __init__(self, index, label=None):
        self.index = index
        self.label = label
        name = f"{index} ({label})" if label else str(index)
        super().__init__(f"dangling node {name}: zero column sum")


class InvalidAlpha(ValidationError):
    pass


class DanglingAfterPerturbation(ValidationError):
    pass


# numerical
class NoConvergence(NumericalError):
    def __init__(self, message, run=None):
        self.run = run
        if run is not None:
            message = f"run {run}: {message}"
        super().__init__(message)


class NotIrreducible(NumericalError):
    pass


class NumericalFailure(NumericalError):
    pass
