"""Exception types raised across the package."""


class MQHError(Exception):
    """Base class for all package errors."""


class ZeroAtom(MQHError, ValueError):
    pass


class NotNormalized(MQHError, ValueError):
    pass


class IndexOutOfRange(MQHError, IndexError):
    pass


class DimensionMismatch(MQHError, ValueError):
    pass


class MonotonicityViolation(MQHError, ValueError):
    pass


class EmptyBatch(MQHError, ValueError):
    pass


class DegenerateKernel(MQHError, ValueError):
    """The pricing kernel has an atom (zero risk premium)."""


class InfeasibleInstance(MQHError, ValueError):
    pass
