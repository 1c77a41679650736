"""Exception hierarchy.

Every error raised by the library derives from :class:`SpectraError`; the CLI
maps the three families below onto exit codes.
"""


class SpectraError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class InputError(SpectraError):
    """Malformed input data (operator files, envelopes)."""

    exit_code = 2


class ParseError(InputError):
    def __init__(self, msg, position=None):
        if position is not None:
            msg = f"{msg} (at {position})"
        super().__init__(msg)
        self.position = position


class MalformedEnvelope(InputError):
    pass


class NonvanishingTail(InputError):
    pass


class NoConvergence(SpectraError):
    exit_code = 4


class NotHermitian(SpectraError):
    pass


class NotSelfAdjoint(SpectraError):
    pass


class NotPositive(SpectraError):
    pass


class SignUndecidable(SpectraError):
    pass


class PromotionLimit(SpectraError):
    """A certified split would need an unreasonably large dense block."""


class UnsupportedPolar(SpectraError):
    pass


class NotInvertible(SpectraError):
    pass


class UncertifiableKernel(SpectraError):
    pass


class InvalidTriple(SpectraError):
    pass


class PreconditionFailed(SpectraError):
    pass


class NormNotAttained(SpectraError):
    pass


class PhaseConditionFailed(SpectraError):
    pass


class BetaOutsideEssentialRange(SpectraError):
    pass


class NoWitnessFound(SpectraError):
    pass
