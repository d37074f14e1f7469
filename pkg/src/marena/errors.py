"""Exception hierarchy.

Every error that can cross the wire protocol carries a stable numeric
``code`` used by the ERROR message; codes are part of the public protocol
contract and must never be renumbered.
"""

from __future__ import annotations


class ArenaError(Exception):
    """Base class for all engine errors."""

    code = 99


class VersionMismatch(ArenaError):
    code = 1


class ProtocolStateError(ArenaError):
    code = 2


class MalformedEnvelope(ArenaError):
    code = 3


class UnknownGame(ArenaError):
    code = 4


class InvalidSettings(ArenaError):
    """Settings rejected; ``key`` names the offending entry."""

    code = 5

    def __init__(self, key: str, message: str = ""):
        self.key = key
        super().__init__(message or f"invalid setting {key!r}")


class UnknownCharacter(InvalidSettings):
    code = 20

    def __init__(self, name: str):
        self.name = name
        InvalidSettings.__init__(self, "characters", f"unknown character {name!r}")


class OutfitOutOfRange(InvalidSettings):
    code = 21

    def __init__(self, message: str = "outfit index outside palette list"):
        InvalidSettings.__init__(self, "charOutfits", message)


class DifficultyOutOfRange(InvalidSettings):
    code = 22

    def __init__(self, message: str = "difficulty outside supported range"):
        InvalidSettings.__init__(self, "difficulty", message)


class ActionOutOfRange(ArenaError):
    code = 6


class SessionLimit(ArenaError):
    code = 7


class UseAfterClose(ArenaError):
    code = 8


class NotReset(ArenaError):
    code = 9


class MissingPlayerKey(ArenaError):
    code = 10


class PhaseViolation(ArenaError):
    code = 11


class LengthMismatch(ArenaError):
    code = 12


class ContinueNotZero(ArenaError):
    """Episode reward bounds are undefined when continueGame > 0."""

    code = 13


class StickyWithStepRatio(ArenaError):
    """Sticky actions > 1 require the underlying step ratio to be 1."""

    code = 14


class UnknownKey(ArenaError):
    code = 15


class PathNotWritable(ArenaError):
    code = 16


class NoCompleteEpisode(ArenaError):
    code = 17


class TrajectoryFormatError(ArenaError):
    code = 18


class IncompatibleRecordings(ArenaError):
    code = 19


class BadShard(ArenaError):
    code = 23


class ExhaustedTrajectories(ArenaError):
    code = 24


class BindFailure(ArenaError):
    code = 25
