"""Exception hierarchy shared by every module."""


class ZkIvfError(Exception):
    """Base class for all errors raised by zkivf."""


class CoordinateOutOfRange(ZkIvfError, ValueError):
    pass


class DimensionMismatch(ZkIvfError, ValueError):
    pass


class RangeOverflow(ZkIvfError, ValueError):
    pass


class TooFewVectors(ZkIvfError, ValueError):
    pass


class InfeasibleCapacity(ZkIvfError, ValueError):
    pass


class InvalidConfig(ZkIvfError, ValueError):
    pass


class NotPowerOfTwo(ZkIvfError, ValueError):
    pass


class IndexOutOfRange(ZkIvfError, IndexError):
    pass


class PathLengthMismatch(ZkIvfError, ValueError):
    pass


class DmaxTooSmall(ZkIvfError, ValueError):
    pass


class EmptyTuple(ZkIvfError, ValueError):
    pass


class LengthMismatch(ZkIvfError, ValueError):
    pass


class RangeViolation(ZkIvfError, ValueError):
    """A witness value falls outside the range a gadget requires."""


class UnsatisfiedConstraint(ZkIvfError):
    """The assigned witness does not satisfy the circuit."""


class WitnessInconsistent(ZkIvfError):
    """The snapshot handed to the prover does not match the commitment."""


class FingerprintMismatch(ZkIvfError):
    pass


class MalformedProof(ZkIvfError, ValueError):
    pass


class MalformedFile(ZkIvfError, ValueError):
    pass


class NonIntegralDerivedParam(ZkIvfError, ValueError):
    pass


class InfeasibleBudgets(ZkIvfError, ValueError):
    pass
