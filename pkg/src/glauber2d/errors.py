"""Exception hierarchy shared by all modules.

Contract violations (bad arguments, mismatched domains, malformed
schedules) raise ContractError subclasses; size limits of the exact
engine raise CapacityError.  The CLI maps ContractError to exit code 1
and CapacityError to exit code 2.
"""


class ContractError(Exception):
    """A precondition or interface contract was violated."""


class ParameterError(ContractError):
    """Invalid parameter value (wrong range, wrong sign, ...)."""


class DomainMismatchError(ContractError):
    """Objects defined on incompatible regions or boundaries."""


class UnsupportedShapeError(ContractError):
    """Operation requires a rectangular region."""


class ScheduleError(ContractError):
    """Malformed censoring schedule (gap, overlap, empty phase)."""


class ReconstructionError(ContractError):
    """Contour set is inconsistent with the given boundary condition."""


class CapacityError(Exception):
    """System too large for the exact engine."""
