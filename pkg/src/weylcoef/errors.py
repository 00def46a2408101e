"""Exception hierarchy shared by all modules."""


class WeylError(Exception):
    """Base class for every error raised by this package."""


class OutOfDomain(WeylError, ValueError):
    pass


class NonPSD(WeylError, ValueError):
    """A density triple failed h1*h2 - h3**2 >= -tol."""


class QuadratureFailure(WeylError, RuntimeError):
    pass


class DegenerateModel(WeylError, ValueError):
    """det Omega vanishes on the whole sampled domain (model not definite)."""


class BracketFailure(WeylError, ValueError):
    """A monotone equation has no solution inside the resolvable range."""


class DegenerateDisk(WeylError, ValueError):
    """The Moebius image of the half-plane is numerically a half-plane."""


class NoConvergence(WeylError, RuntimeError):
    pass


class NestingViolation(WeylError, RuntimeError):
    """Consecutive Weyl disks are not nested within tolerance."""


class StepUnderflow(WeylError, RuntimeError):
    pass


class HypothesisViolated(WeylError, ValueError):
    pass


class InsufficientSpan(WeylError, ValueError):
    pass


class InvalidParameters(WeylError, ValueError):
    pass


class SplitOutOfRange(InvalidParameters):
    pass


class BetaNonzero(WeylError, ValueError):
    """A linear term beta*z is present; split it off before the tail checks."""


class MalformedString(InvalidParameters):
    pass


class ConfigError(WeylError, ValueError):
    pass
