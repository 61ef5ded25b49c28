"""Exception types raised across the package."""


class SSKError(Exception):
    """Base class for every error raised by ssklab."""


class InvalidDimensionError(SSKError, ValueError):
    pass


class InvalidMatrixError(SSKError, ValueError):
    pass


class InvalidArgumentError(SSKError, ValueError):
    pass


class BranchUndefinedError(SSKError, ValueError):
    """Real argument on the cut [-2, 2] of the semicircle Stieltjes transform."""


class PoleError(SSKError, ValueError):
    """Evaluation point coincides with an eigenvalue."""


class RegimeMisuseError(SSKError, ValueError):
    """A temperature-regime-specific formula was called outside its regime."""


class DegenerateInputError(SSKError, ValueError):
    pass


class OracleMisuseError(SSKError, ValueError):
    pass


class SolverFailure(SSKError, RuntimeError):
    pass


class QuadratureFailure(SSKError, RuntimeError):
    pass


class ContourEscapeError(SSKError, RuntimeError):
    pass


class MalformedRecordError(SSKError, ValueError):
    def __init__(self, path, line_number, reason):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}: line {line_number}: {reason}")


class IncompleteFileError(SSKError, IOError):
    """Record file lacks its end marker (interrupted write)."""
