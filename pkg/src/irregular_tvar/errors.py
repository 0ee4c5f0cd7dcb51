"""Exception types shared across the package."""


class TvarError(Exception):
    """Base class for all errors raised by irregular_tvar."""


class DomainError(TvarError, ValueError):
    """An argument lies outside the domain of a function."""


class UnsupportedMomentError(TvarError, ValueError):
    pass


class DegeneratePathError(TvarError, ValueError):
    """A path has a non-positive value where a ratio is needed."""


class EmptyWindowError(TvarError, ValueError):
    pass


class WindowTooSmallError(TvarError, ValueError):
    """The estimation window holds fewer distinct design points than unknowns."""


class DegenerateWindowError(TvarError, ValueError):
    pass


class DiagnosticsUnavailableError(TvarError, ValueError):
    """Diagnostic quantities need the true innovations or pre-history."""


class GridMismatchError(TvarError, ValueError):
    pass


class OracleTooLargeError(TvarError, ValueError):
    pass


class OutOfRegimeError(TvarError, ValueError):
    """The lower-bound construction is only defined for shape in (0, 2)."""


class ConfigError(TvarError, ValueError):
    """Malformed or inconsistent configuration."""


class LPError(TvarError, RuntimeError):
    """The LP behind a local fit did not reach an optimal vertex."""
