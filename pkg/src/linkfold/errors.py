"""Exception hierarchy shared by every linkfold module."""


class LinkfoldError(Exception):
    """Base class for all errors raised by linkfold."""


class InvalidInput(LinkfoldError, ValueError):
    """Input is malformed, non-simple, wrongly oriented or of the wrong shape."""


class InvalidParams(LinkfoldError, ValueError):
    pass


class InfeasibleLengths(LinkfoldError, ValueError):
    """Length vector violates the polygon inequality (each side < sum of the others)."""


class DegenerateTriangle(LinkfoldError, ValueError):
    pass


class ConvergenceFailure(LinkfoldError, RuntimeError):
    pass


class SingularConstraint(LinkfoldError, ArithmeticError):
    """Closure constraint gradient vanishes or is undefined."""


class NearContact(LinkfoldError, ArithmeticError):
    """A strain-energy denominator collapsed: the state touches the moduli-space boundary."""


class Stalled(LinkfoldError, RuntimeError):
    """Integrator step size underflowed while trying to satisfy its guards."""


class NoConnectionFound(LinkfoldError, RuntimeError):
    def __init__(self, message, reached=None):
        super().__init__(message)
        self.reached = reached
