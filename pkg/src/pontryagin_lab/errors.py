"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidModelError(LabError, ValueError):
    """The spectral surrogate violates its invariants."""


class InconsistentGramError(LabError):
    """The Gram data does not admit the expected number of negative squares."""


class SingularResolventError(LabError, ArithmeticError):
    """The resolvent does not exist at the requested spectral parameter."""


class IllConditionedError(LabError, ArithmeticError):
    """A matrix that must be inverted is numerically singular."""


class DegenerateGeneratorError(LabError, ValueError):
    """The top counterterm vanishes so the approximating generator is undefined."""


class DegenerateProjectionError(LabError, ValueError):
    """The even-order correction in the projection has a zero denominator."""


class NumericOverflowError(LabError, ArithmeticError):
    """A matrix function produced non-finite entries."""


class ConfigError(LabError, ValueError):
    """The experiment configuration cannot be parsed or validated."""
