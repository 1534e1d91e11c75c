"""Exception types shared across the package."""


class DebondError(Exception):
    """Base class for all package errors."""


class GridMismatch(DebondError, ValueError):
    pass


class GridError(DebondError, ValueError):
    """Invalid domain description (empty Gamma, bad spacing, disconnected region)."""


class ToughnessError(DebondError, ValueError):
    pass


class DriveError(DebondError, ValueError):
    pass


class EmptyAdmissibleClass(DebondError):
    """No field equals the boundary data on Gamma and vanishes outside the set."""


class SolverDivergence(DebondError):
    """The linear solver hit its iteration cap above tolerance."""


class InnerSolveDivergence(DebondError):
    """A linear solve inside the free-boundary minimisation failed.

    ``step`` and ``trace`` are filled in when raised from a time-stepping run.
    """

    def __init__(self, message, step=None, trace=None):
        super().__init__(message)
        self.step = step
        self.trace = trace


class InadmissiblePowerDatum(DebondError):
    pass


class WorkFormMismatch(DebondError):
    """The two expressions of the external power disagree."""


class UnsupportedDriveClass(DebondError):
    pass


class ConfigError(DebondError, ValueError):
    pass
