"""Exception hierarchy shared by every module."""


class VerinferError(Exception):
    """Base class for all library errors."""


class ProfileError(VerinferError):
    pass


class InverseOfZero(VerinferError, ZeroDivisionError):
    pass


class PointNotOnCurve(VerinferError, ValueError):
    pass


class DimensionMismatch(VerinferError, ValueError):
    pass


class NoVariables(VerinferError, ValueError):
    pass


class DecodingError(VerinferError, ValueError):
    """Bytes are not a canonical encoding of the expected object."""


class WitnessInconsistent(VerinferError):
    pass


class DegreeExceeded(VerinferError):
    pass


class ShapeMismatch(VerinferError, ValueError):
    pass


class MagnitudeOverflow(VerinferError, ValueError):
    pass


class EntryNotInTable(VerinferError):
    pass


class DomainTooLarge(VerinferError, ValueError):
    pass


class BadCutPoint(VerinferError, ValueError):
    pass


class NonPositiveEpsilon(VerinferError, ValueError):
    pass


class TraceMismatch(VerinferError):
    pass


class MalformedProof(VerinferError):
    pass


class NodeUnavailable(VerinferError):
    pass


class ShardFailed(VerinferError):
    pass


class DegenerateReference(VerinferError, ValueError):
    pass


class AttestationMissing(VerinferError):
    pass


class AuthFailure(VerinferError):
    pass


class ReplayDetected(VerinferError):
    pass


class NoNodes(VerinferError, ValueError):
    pass


class PoisonedRead(VerinferError):
    """A destroyed (zeroized) TEE buffer was read."""
