"""Closed error catalog.

Every failure the engine can report maps to exactly one subclass of
:class:`MetaError`.  The class name doubles as the wire code, so the response
line for a failed request is always ``error <code> <detail>`` with a detail
string that is deterministic for a given store state and request.
"""

from __future__ import annotations


class MetaError(Exception):
    """Base class; ``code`` is the wire token, ``detail`` the message text."""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    @property
    def code(self) -> str:
        return type(self).__name__

    @property
    def line(self) -> str:
        return f"error {self.code} {self.detail}"


class ParseError(MetaError):
    pass


class UnknownKind(MetaError):
    pass


class UnknownIdentifier(MetaError):
    pass


class UnknownFeature(MetaError):
    pass


class TypeMismatch(MetaError):
    pass


class PositionOutOfRange(MetaError):
    pass


class FrozenFeature(MetaError):
    pass


class PotencyViolation(MetaError):
    pass


class CardinalityViolation(MetaError):
    pass


class IntegrityViolation(MetaError):
    pass


class LevelViolation(MetaError):
    pass


class CapacityExceeded(MetaError):
    pass


class SingletonViolation(MetaError):
    pass


class RootDeletion(MetaError):
    pass


class InvalidCapacity(MetaError):
    pass


class InheritanceCycle(MetaError):
    """Library-level only: raised while resolving a corrupt parent chain."""


class MalformedSnapshot(MetaError):
    def __init__(self, detail: str, line_no: int = 0):
        super().__init__(f"line {line_no}: {detail}" if line_no else detail)
        self.line_no = line_no


class UnsupportedVersion(MetaError):
    pass


class ReferenceToMissingElement(MetaError):
    pass
