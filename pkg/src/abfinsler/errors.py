"""Exception hierarchy shared by all modules."""


class FinslerError(Exception):
    """Base class for toolkit errors."""


class DomainError(FinslerError, ValueError):
    """Input outside the domain where a quantity is defined."""

    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s


class DimensionError(FinslerError, ValueError):
    pass


class DegenerateBetaError(FinslerError, ValueError):
    pass


class ValidityError(FinslerError):
    """Strong convexity fails (fundamental tensor not positive definite)."""

    def __init__(self, message, y=None):
        super().__init__(message)
        self.y = y


class SingularityError(DomainError):
    """Evaluation too close to a pole of the Riccati closed form."""


class IntegrationBlockedError(FinslerError):
    """Quadrature interval crosses a singularity."""

    def __init__(self, message, singularity=None):
        super().__init__(message)
        self.singularity = singularity


class QuadratureError(FinslerError):
    pass


class DegeneracyError(FinslerError):
    """Numerical degeneracy: frame rank loss, transport collapse, ..."""

    def __init__(self, message, last_t=None):
        super().__init__(message)
        self.last_t = last_t


class ConfigError(FinslerError, ValueError):
    pass
