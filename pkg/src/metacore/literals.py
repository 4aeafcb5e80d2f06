"""Literal tokens of the request protocol and the snapshot format.

One grammar serves both surfaces: integers in decimal, reals with a
mandatory decimal point, ``true``/``false``, double-quoted strings with
backslash escapes, element references as ``Kind:index``, the unbounded
cardinality marker ``*`` and the removal sentinel ``void``.
"""

from __future__ import annotations

import re

from .errors import ParseError
from .store import ElementId, parse_id

MALFORMED = "malformed request"


class _Sentinel:
    __slots__ = ("_label",)

    def __init__(self, label: str):
        self._label = label

    def __repr__(self):
        return self._label


VOID = _Sentinel("void")
STAR = _Sentinel("*")

_INT_RE = re.compile(r"-?(0|[1-9][0-9]*)\Z")
_REAL_RE = re.compile(r"-?(0|[1-9][0-9]*)\.[0-9]+([eE][+-]?[0-9]+)?\Z")
_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}
_UNESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def tokenize(line: str) -> list[str]:
    """Split a request line into raw lexemes; quoted strings stay intact."""
    tokens = []
    i, n = 0, len(line)
    while i < n:
        ch = line[i]
        if ch in " \t":
            i += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n:
                if line[j] == "\\":
                    j += 2
                    continue
                if line[j] == '"':
                    break
                j += 1
            if j >= n:
                raise ParseError(MALFORMED)
            tokens.append(line[i : j + 1])
            i = j + 1
            if i < n and line[i] not in " \t":
                raise ParseError(MALFORMED)
        else:
            j = i
            while j < n and line[j] not in " \t":
                if line[j] == '"':
                    raise ParseError(MALFORMED)
                j += 1
            tokens.append(line[i:j])
            i = j
    return tokens


def unescape_string(lexeme: str) -> str:
    if len(lexeme) < 2 or lexeme[0] != '"' or lexeme[-1] != '"':
        raise ParseError(MALFORMED)
    out = []
    i, end = 1, len(lexeme) - 1
    while i < end:
        ch = lexeme[i]
        if ch == "\\":
            i += 1
            if i >= end or lexeme[i] not in _ESCAPES:
                raise ParseError(MALFORMED)
            out.append(_ESCAPES[lexeme[i]])
        elif ch == '"':
            raise ParseError(MALFORMED)
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def escape_string(value: str) -> str:
    return '"' + "".join(_UNESCAPES.get(ch, ch) for ch in value) + '"'


def parse_literal(token: str):
    """Parse one value lexeme; raises ParseError for anything unrecognized."""
    if token.startswith('"'):
        return unescape_string(token)
    if token == "true":
        return True
    if token == "false":
        return False
    if token == "void":
        return VOID
    if token == "*":
        return STAR
    if _INT_RE.match(token):
        return int(token)
    if _REAL_RE.match(token):
        return float(token)
    ref = parse_id(token)
    if ref is not None:
        return ref
    raise ParseError(MALFORMED)


def render_real(value: float) -> str:
    """Shortest round-trip decimal with a guaranteed decimal point."""
    text = repr(value)
    if "e" in text or "E" in text:
        mantissa, _, exponent = text.partition("e")
        if "." not in mantissa:
            mantissa += ".0"
        return f"{mantissa}e{exponent}"
    if "." not in text:
        text += ".0"
    return text


def render_value(value) -> str:
    """Canonical text of one stored value."""
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return render_real(value)
    if isinstance(value, str):
        return escape_string(value)
    if isinstance(value, ElementId):
        return str(value)
    if value is STAR:
        return "*"
    raise TypeError(f"unrenderable value {value!r}")
