# errors.py
"""
Exception hierarchy for fracwell
Library code raises these; only the command line front end turns them into exit codes
"""


class FracWellError(Exception):
    """Base class for all fracwell errors"""


class DomainError(FracWellError, ValueError):
    """An argument lies outside the domain of the operation"""


class HypothesisError(DomainError):
    """A required inequality between model quantities does not hold"""

    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        message = f"hypothesis violated: {inequality}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class NumericalError(FracWellError, ArithmeticError):
    """Quadrature, series or iteration failed to deliver the requested accuracy"""


class NoBoundStateError(NumericalError):
    """No eigenvalue was found below zero for the given potential"""


class ConfigurationError(FracWellError):
    """The run configuration is impractical or malformed"""
