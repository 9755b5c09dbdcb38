## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘


class CrossPCFError(Exception):
    def __init__(self, message: str = "", *, token=None, context: dict | None = None):
        """Base class for all errors raised by this package."""
        super().__init__(message)
        self.token: str | None = token
        self.context: dict = context or {}

class ConfigParseError(CrossPCFError, ValueError):
    def __init__(self, message, *, filename=None, line=None, column=None, token=None):
        super().__init__(message, token=token)
        self.filename = filename
        self.line = line
        self.column = column

class ConfigValueError(CrossPCFError, ValueError):
    """A configuration parsed fine but one of its entries is missing or invalid."""
    def __init__(self, message, *, key=None, filename=None, line=None):
        super().__init__(message, token=key)
        self.key = key
        self.filename = filename
        self.line = line

class PatternError(CrossPCFError, ValueError):
    pass

class ModelValueError(CrossPCFError, ValueError):
    pass

class ArtifactError(CrossPCFError, OSError):
    def __init__(self, message, *, filename=None, line=None):
        super().__init__(message, token=filename)
        self.filename = filename
        self.line = line

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NumericalError(CrossPCFError, ArithmeticError):
    """Numerical failures that are not caused by bad input, exit code 4 on the CLI."""
    pass

class FieldSimulationError(NumericalError):
    pass

class LikelihoodError(NumericalError):
    def __init__(self, message, *, pair=None, context=None):
        super().__init__(message, context=context)
        self.pair = pair

class SeparationError(NumericalError):
    pass

class BandwidthError(NumericalError):
    pass


class ResolutionWarning(UserWarning):
    """Grid too coarse for the correlation scale being simulated."""

class ConvergenceWarning(UserWarning):
    """An inner iteration hit its cap; the best iterate was kept."""
