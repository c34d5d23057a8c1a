"""Exception hierarchy shared by the solvers and the CLI."""


class DBBSDEError(Exception):
    """Base class for all package errors."""


class ConfigError(DBBSDEError, ValueError):
    """Invalid grid, problem or command configuration."""


class ModelError(DBBSDEError):
    """The problem data is inconsistent, e.g. a lower barrier above the upper one."""


class NumericalError(DBBSDEError, ArithmeticError):
    """A root search did not converge or the sweep produced non-finite values."""


class InvariantViolation(DBBSDEError):
    """An audit found a broken invariant."""


class StabilityWarning(UserWarning):
    """The step size is too large for the energy bound of the explicit scheme."""
