"""Exception types shared across the package.

Validation and guard failures map to CLI exit code 2, runtime failures
to exit code 1.
"""


class ValidationError(ValueError):
    """Bad input: violated precondition, schema mismatch, or guard."""


class StateSpaceOverflow(ValidationError):
    """Exact enumeration would exceed the configured state-count guard."""


class GridResolutionError(ValidationError):
    """Radial grid too coarse or too small for the requested solve."""


class Absorbed(Exception):
    """Total event rate is zero: the stochastic dynamics is frozen."""


class NoPlateauError(RuntimeError):
    """No window with a stable local slope was found; refusing to fit."""


class IntegratorError(RuntimeError):
    """An adaptive integrator failed to meet its tolerance."""
