"""Exception hierarchy."""


class DtnJordanError(Exception):
    """Base class for all errors raised by this package."""


class InvalidMeshError(DtnJordanError, ValueError):
    pass


class DimensionError(DtnJordanError, ValueError):
    pass


class EllipticityError(DtnJordanError, ValueError):
    pass


class NotInOperatorDomainError(DtnJordanError, ValueError):
    """The interior rows of the residual do not vanish."""


class PreconditionError(DtnJordanError):
    pass


class ResolventViolationError(PreconditionError):
    """The spectral parameter is (numerically) a Dirichlet eigenvalue."""

    def __init__(self, lam, margin, threshold):
        self.lam = complex(lam)
        self.margin = float(margin)
        self.threshold = float(threshold)
        super().__init__(
            f"resolvent-violation: lambda={self.lam!r} has margin "
            f"{self.margin:.3e} <= {self.threshold:.3e}"
        )


class ContourViolationError(DtnJordanError):
    pass


class OrderError(DtnJordanError, ValueError):
    pass


class InfeasibleCoercivityError(DtnJordanError):
    pass


class ConstructionError(DtnJordanError, ValueError):
    pass


class DegenerateSeedError(ConstructionError):
    pass


class ConfigError(DtnJordanError, ValueError):
    pass


class ReportFormatError(DtnJordanError, ValueError):
    """A report file is malformed or carries an unsupported schema version."""
