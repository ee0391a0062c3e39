"""Cost-sensitive f-divergences, minimax lower bounds and learner simulations."""

from .errors import CapacityError, ConvergenceError, CostBoundError, DimensionError, DomainError

__all__ = ["CapacityError", "ConvergenceError", "CostBoundError", "DimensionError", "DomainError"]
__version__ = "0.1.0"
