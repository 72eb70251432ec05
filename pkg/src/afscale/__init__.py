"""Laplace exponents, subordinator laws and simulation of integrated reflected diffusions."""

__version__ = "0.1.0"

from .errors import DomainError, QuadratureError, ToleranceError  # noqa: E402

__all__ = ["DomainError", "ToleranceError", "QuadratureError", "__version__"]
