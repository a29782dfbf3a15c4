"""Exception hierarchy for depcons."""

from __future__ import annotations


class DepconsError(Exception):
    """Base class for every diagnostic raised by the package.

    ``line`` and ``path`` are filled in when the error is tied to a
    location in an input file, so the CLI can name it.
    """

    def __init__(self, message: str, *, line: int | None = None, path: str | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.path = path

    def __str__(self) -> str:
        where = []
        if self.path is not None:
            where.append(str(self.path))
        if self.line is not None:
            where.append(f"line {self.line}")
        prefix = ":".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message


# scale / dataset
class DuplicateLabel(DepconsError):
    pass


class ScaleTooSmall(DepconsError):
    pass


class UnknownLabel(DepconsError):
    pass


class DuplicateOpinion(DepconsError):
    pass


class GapInArrivalOrder(DepconsError):
    pass


class EmptyDataset(DepconsError):
    pass


class InvalidRecord(DepconsError):
    """A raw record is missing fields or has values of the wrong type."""


class ParseError(DepconsError):
    pass


# numeric operations
class ScoreOutOfRange(DepconsError):
    pass


class EmptyInput(DepconsError):
    pass


class LengthMismatch(DepconsError):
    pass


class KeyMismatch(DepconsError):
    pass


class WrongMode(DepconsError):
    pass


class MissingTruth(DepconsError):
    pass


# simulation / inference
class ConfigInvalid(DepconsError):
    pass


class EnumerationTooLarge(DepconsError):
    pass


class ZeroEvidence(DepconsError):
    """The observed disclosure sequence has probability zero under the model."""


class UsageError(DepconsError):
    pass
