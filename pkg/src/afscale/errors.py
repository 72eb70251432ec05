"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a function is defined."""


class ToleranceError(ArithmeticError):
    """A numerical result could not be certified to the requested tolerance."""


class QuadratureError(ToleranceError):
    """Two quadrature rules of different order disagree beyond tolerance."""
