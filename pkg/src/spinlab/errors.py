"""Exception types shared across spinlab."""


class SpinlabError(Exception):
    """Base class for all spinlab errors."""


class InvalidSpecError(SpinlabError, ValueError):
    """A chain specification or input parameter is malformed."""


class NotApplicableError(SpinlabError, ValueError):
    """The requested operation is not defined for this input (e.g. open chain momentum grid)."""


class NumericalInconsistencyError(SpinlabError, ArithmeticError):
    """A computed quantity violated an invariant beyond tolerance."""


class ResourceGuardError(SpinlabError, MemoryError):
    """The requested problem is too large for dense brute-force treatment."""


class InvalidStateError(SpinlabError, ValueError):
    """A functional is not a state (non-positive, unnormalised) or does not match its algebra."""
