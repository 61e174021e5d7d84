"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class UnboundedQuantileError(DomainError):
    """The requested quantile level has no finite quantile."""


class NonIntegrableError(DomainError):
    """An integral that must converge near zero does not."""


class DivergenceError(ArithmeticError):
    """A moment, norm or supremum was detected to be infinite."""


class InfeasibleHypothesisError(ValueError):
    """The hypothesis inequality cannot hold for any finite constant."""


class EmptySearchSpaceError(ValueError):
    """No feasible candidate exists on the supplied search grids."""
