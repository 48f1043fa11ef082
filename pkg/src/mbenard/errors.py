"""Exception hierarchy.

Domain errors (everything deriving from :class:`MBenardError` except
:class:`UsageError`) map to CLI exit status 1; usage errors map to 2.
"""


class MBenardError(Exception):
    """Base class for all package errors."""


class DataValidationError(MBenardError, ValueError):
    """Input data is malformed (wrong shape, non-finite values)."""


class ConfigurationError(MBenardError, ValueError):
    """A configuration parameter is out of its admissible range."""


class ContractViolation(MBenardError):
    """An operand breaks a structural precondition (solenoidality, support)."""


class UsageError(MBenardError, TypeError):
    """An operation was called with arguments of the wrong kind or order."""


class ContainerError(MBenardError):
    """A checkpoint container failed validation."""


class InstabilityError(MBenardError):
    """Numerical blow-up detected during time integration.

    ``t`` is the simulation time of the offending state; ``report`` is filled in
    by the run loop with the partial run report.
    """

    def __init__(self, message, t, report=None):
        super().__init__(f"{message} (t={t!r})")
        self.t = t
        self.report = report
