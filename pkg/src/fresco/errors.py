"""Exception types shared across the package.

Every mathematically meaningful failure gets its own class so callers
(and the CLI) can distinguish obstructions from plain usage errors.
"""


class FrescoError(Exception):
    """Base class for all library errors."""


class NotAUnit(FrescoError):
    """Inversion of a series whose constant term is zero."""


class Obstruction(FrescoError):
    """Resonant coefficient blocking an order-by-order ODE solve.

    Carries the resonant exponent and the offending coefficient so the
    caller can name the obstruction exactly.
    """

    def __init__(self, exponent, coefficient, context: str = ""):
        self.exponent = exponent
        self.coefficient = coefficient
        self.context = context
        where = f" in {context}" if context else ""
        super().__init__(
            f"resonant coefficient {coefficient} of b^{exponent}{where}"
        )


class NotAGenerator(FrescoError):
    """The given vector does not generate the module."""


class ResonanceAtTruncation(FrescoError):
    """A linear solve is under-determined at the working order."""


class OrderTooSmall(FrescoError):
    """The working order violates a documented lower bound."""


class NotPrimitive(FrescoError):
    """Operation requires all roots in a single class mod 1."""


class NotNormal(FrescoError):
    """Submodule is not normal (quotient would not be free)."""


class BadAnnihilatorShape(FrescoError):
    """Annihilator coefficients violate the valuation precondition."""


class ClassNotSmallest(FrescoError):
    """Requested class is not a prefix of the class ordering."""


class UnsupportedShape(FrescoError):
    """Input violates a convention the classification relies on."""
