"""Exception hierarchy shared by all modules.

Validation problems (bad inputs, malformed files) and coverage problems
(windows falling outside the available intensity data) map to distinct
CLI exit codes, so they are distinct exception types.
"""


class CarbonSchedError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CarbonSchedError):
    """Input data or parameters violate a documented contract."""


class CoverageError(CarbonSchedError):
    """A requested time window is not covered by the intensity series."""


class InfeasibleError(CoverageError):
    """No feasible schedule exists under the given constraints."""


class InvariantError(CarbonSchedError):
    """An internal consistency check failed; indicates a bug."""
