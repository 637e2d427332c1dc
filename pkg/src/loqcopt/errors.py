"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Matrix or basis shapes are inconsistent."""


class SizeGuardError(ValueError):
    """Problem size exceeds what the exact algorithms are allowed to attempt."""


class ConservationError(ValueError):
    """Photon number is not conserved between the pieces of a calculation."""


class UndefinedFidelityError(ValueError):
    """Fidelity requested for an operator of zero norm."""


class EvaluationError(ArithmeticError):
    """An objective or gradient evaluation produced a non-finite value."""
