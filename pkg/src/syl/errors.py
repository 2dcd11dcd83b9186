"""Exception types shared across the package."""


class SylError(Exception):
    """Base class for all errors raised by this package."""


class InadmissibleInput(SylError, ValueError):
    """Parameters or first-integral value outside the admissible regime."""


class DegenerateSlope(SylError, ArithmeticError):
    """1 - xi_t**2 fell below the guard while k >= 2."""


class IntegrationFailure(SylError, RuntimeError):
    """The ODE integrator failed (step underflow, blow-up, non-finite state)."""


class PeriodNotFound(SylError, RuntimeError):
    """No second minimum of xi was found inside the integrated span."""


class MatchFailure(SylError, RuntimeError):
    """The asymptotic matching hypotheses are not met by the trajectory."""
