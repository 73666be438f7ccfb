"""Exception types shared across the package."""


class SizeOutOfRangeError(ValueError):
    """A size parameter falls outside its supported range."""


class InvalidInputError(ValueError):
    """A party received an input outside its domain."""


class DimensionMismatchError(ValueError):
    """Operands describe systems of incompatible dimension."""


class LengthMismatchError(ValueError):
    """Bit-string lengths are inconsistent."""


class DomainError(ValueError):
    """A numeric argument lies outside the function's domain."""
