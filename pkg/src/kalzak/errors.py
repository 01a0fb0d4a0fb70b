"""Exception taxonomy shared across modules.

ConfigError and ModelValidationError map to CLI exit code 2, NumericError
and its subclasses to exit code 3, AcceptanceFailure to exit code 4.
"""


class ConfigError(ValueError):
    """Run configuration is malformed or inconsistent."""


class NumericError(RuntimeError):
    """A solver left its validity envelope (divergence, lost PD, bad mass)."""


class FilterDivergenceError(NumericError):
    """The inverse covariance stopped being positive definite."""


class MassError(NumericError):
    """A density lost positivity or integrability on the grid."""


class AcceptanceFailure(RuntimeError):
    """At least one acceptance criterion did not pass."""
