"""Canonical snapshot format (``.mcs``): byte-deterministic save and load.

Layout: a header naming the format version, per-kind capacities and fresh
counters, then one line per occupied slot in canonical order -- kinds in
declaration order, indices ascending, features in catalog order followed by
dynamic slots sorted by declaring identifier.  Loading a snapshot that
serialize() produced and re-serializing it yields the identical bytes.
"""

from __future__ import annotations

from .errors import MalformedSnapshot, ReferenceToMissingElement, UnsupportedVersion
from .kernel import CATALOG_BY_NAME, CATALOGS, KIND_ORDER, MetaKind
from .literals import STAR, VOID, parse_literal, render_value
from .store import ROOT_ID, ElementId, Record, Store, parse_id

HEADER = "metacore-snapshot"
VERSION = "v1"
FILE_EXTENSION = ".mcs"


def _render_slot(key_text: str, values) -> str:
    return key_text + "=" + ",".join(render_value(v) for v in values)


def serialize(store: Store) -> bytes:
    """Canonical bytes of the complete store state."""
    lines = [f"{HEADER} {VERSION}"]
    for kind in KIND_ORDER:
        lines.append(f"capacity {kind.value} {store.capacities[kind]}")
    for kind in KIND_ORDER:
        lines.append(f"fresh {kind.value} {store.fresh[kind]}")
    for kind in KIND_ORDER:
        live = store.live[kind]
        dead = store.tombstones[kind]
        for index in range(1, store.fresh[kind]):
            if index in dead:
                lines.append(f"tombstone {kind.value}:{index}")
                continue
            rec = live[index]
            parts = [f"{kind.value}:{index}"]
            for desc in CATALOGS[kind]:
                values = rec.get(desc.name)
                if values:
                    parts.append(_render_slot(desc.name, values))
            dynamic = sorted(
                (k for k in rec if isinstance(k, ElementId)),
                key=lambda e: e.sort_key,
            )
            for key in dynamic:
                values = rec.get(key)
                if values:
                    parts.append(_render_slot(str(key), values))
            lines.append(" ".join(parts))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _split_values(text: str, line_no: int) -> list[str]:
    """Split a comma-joined value list, honoring quoted strings."""
    parts = []
    current = []
    in_string = False
    i = 0
    while i < len(text):
        ch = text[i]
        if in_string:
            current.append(ch)
            if ch == "\\":
                if i + 1 < len(text):
                    current.append(text[i + 1])
                    i += 1
            elif ch == '"':
                in_string = False
        elif ch == '"':
            current.append(ch)
            in_string = True
        elif ch == ",":
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
        i += 1
    if in_string:
        raise MalformedSnapshot("unterminated string", line_no)
    parts.append("".join(current))
    return parts


def _split_record_tokens(line: str, line_no: int) -> list[str]:
    """Space-split a record line; spaces inside quoted strings do not split."""
    tokens = []
    current = []
    in_string = False
    i = 0
    while i < len(line):
        ch = line[i]
        if in_string:
            current.append(ch)
            if ch == "\\":
                if i + 1 < len(line):
                    current.append(line[i + 1])
                    i += 1
            elif ch == '"':
                in_string = False
        elif ch == '"':
            current.append(ch)
            in_string = True
        elif ch == " ":
            if current:
                tokens.append("".join(current))
                current = []
        else:
            current.append(ch)
        i += 1
    if in_string:
        raise MalformedSnapshot("unterminated string", line_no)
    if current:
        tokens.append("".join(current))
    return tokens


def _parse_record_line(line: str, line_no: int):
    tokens = _split_record_tokens(line, line_no)
    if not tokens:
        raise MalformedSnapshot("empty record line", line_no)
    eid = parse_id(tokens[0])
    if eid is None:
        raise MalformedSnapshot(f"bad element id {tokens[0]!r}", line_no)
    slots = []
    for token in tokens[1:]:
        key_text, sep, value_text = token.partition("=")
        if not sep or not key_text:
            raise MalformedSnapshot(f"bad slot {token!r}", line_no)
        values = []
        for value_token in _split_values(value_text, line_no):
            try:
                value = parse_literal(value_token)
            except Exception:
                raise MalformedSnapshot(f"bad literal {value_token!r}", line_no) from None
            if value is VOID:
                raise MalformedSnapshot("void cannot be stored", line_no)
            values.append(value)
        if ":" in key_text:
            key = parse_id(key_text)
            if key is None:
                raise MalformedSnapshot(f"bad slot key {key_text!r}", line_no)
        else:
            key = key_text
        slots.append((key, values))
    return eid, slots


def _check_builtin_value(kind: MetaKind, name: str, values, line_no: int) -> None:
    desc = CATALOG_BY_NAME[kind].get(name)
    if desc is None:
        raise MalformedSnapshot(f"unknown feature {name!r} for {kind.value}", line_no)
    if desc.arity == "scalar" and len(values) > 1:
        raise MalformedSnapshot(f"scalar feature {name!r} with {len(values)} values", line_no)
    vk = desc.value_kind
    for value in values:
        if isinstance(vk, MetaKind):
            ok = isinstance(value, ElementId) and value.kind is vk
        elif vk == "string":
            ok = type(value) is str
        elif vk == "integer":
            ok = type(value) is int
        elif vk == "boolean":
            ok = value is True or value is False
        elif vk == "bound":
            ok = value is STAR or type(value) is int
        elif vk in ("classification", "primitive"):
            ok = type(value) is str
        else:
            ok = False
        if not ok:
            raise MalformedSnapshot(f"value type for {name!r}", line_no)


def deserialize(data: bytes) -> Store:
    """Reconstruct a store; identifiers and counters are restored exactly."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedSnapshot("not UTF-8", 1) from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    else:
        raise MalformedSnapshot("missing final newline", max(len(lines), 1))
    if not lines:
        raise MalformedSnapshot("empty document", 1)

    head = lines[0].split(" ")
    if len(head) != 2 or head[0] != HEADER:
        raise MalformedSnapshot("bad header", 1)
    if head[1] != VERSION:
        raise UnsupportedVersion(head[1])

    capacities: dict[MetaKind, int] = {}
    fresh: dict[MetaKind, int] = {}
    line_no = 1
    for section, table in (("capacity", capacities), ("fresh", fresh)):
        for kind in KIND_ORDER:
            line_no += 1
            if line_no > len(lines):
                raise MalformedSnapshot(f"missing {section} line", line_no)
            parts = lines[line_no - 1].split(" ")
            if (
                len(parts) != 3
                or parts[0] != section
                or parts[1] != kind.value
                or not parts[2].isdigit()
            ):
                raise MalformedSnapshot(f"bad {section} line", line_no)
            table[kind] = int(parts[2])

    try:
        store = Store(capacities)
    except Exception as exc:
        raise MalformedSnapshot(str(exc), 2) from None

    expected = []
    for kind in KIND_ORDER:
        if fresh[kind] < 1 or fresh[kind] > capacities[kind] + 1:
            raise MalformedSnapshot(f"fresh counter for {kind.value}", 1)
        for index in range(1, fresh[kind]):
            expected.append(ElementId(kind, index))

    # Body: one line per occupied slot, in exact canonical order.
    body_start = line_no
    records: dict[ElementId, tuple[list, int]] = {}
    tombstoned: set[ElementId] = set()
    for offset, expected_id in enumerate(expected):
        line_no = body_start + offset + 1
        if line_no > len(lines):
            raise MalformedSnapshot(f"missing record for {expected_id}", line_no)
        line = lines[line_no - 1]
        if line.startswith("tombstone "):
            token = line[len("tombstone "):]
            if parse_id(token) != expected_id:
                raise MalformedSnapshot(f"expected {expected_id}", line_no)
            tombstoned.add(expected_id)
            continue
        eid, slots = _parse_record_line(line, line_no)
        if eid != expected_id:
            raise MalformedSnapshot(f"expected {expected_id}", line_no)
        records[eid] = (slots, line_no)
    if body_start + len(expected) != len(lines):
        raise MalformedSnapshot("trailing content", body_start + len(expected) + 1)
    if ROOT_ID not in records:
        raise MalformedSnapshot("RootFolder:1 missing", 1)

    live_ids = set(records)

    # Install records.
    store.live = {k: {} for k in KIND_ORDER}
    store.tombstones = {k: set() for k in KIND_ORDER}
    store.fresh = dict(fresh)
    for eid in tombstoned:
        store.tombstones[eid.kind].add(eid.index)
    for eid, (slots, rec_line) in records.items():
        rec: Record = {}
        seen_keys = set()
        for key, values in slots:
            if key in seen_keys:
                raise MalformedSnapshot(f"duplicate slot {key}", rec_line)
            seen_keys.add(key)
            if isinstance(key, str):
                _check_builtin_value(eid.kind, key, values, rec_line)
            elif eid.kind is not MetaKind.INSTANCE or key.kind not in (
                MetaKind.ATTRIBUTE,
                MetaKind.COMPOSITION,
                MetaKind.ASSOCIATION,
            ):
                raise MalformedSnapshot(f"dynamic slot on {eid}", rec_line)
            if not values:
                raise MalformedSnapshot(f"empty slot {key}", rec_line)
            rec[key] = values
        if eid.kind is MetaKind.INSTANCE:
            ident = rec.get("identifier")
            if not ident or ident[0] != str(eid):
                raise MalformedSnapshot(f"identifier mismatch for {eid}", rec_line)
        store.live[eid.kind][eid.index] = rec

    # Closure: every reference and every dynamic slot key must be live.
    for eid, rec in store.iter_live():
        for key, values in rec.items():
            if isinstance(key, ElementId) and key not in live_ids:
                raise ReferenceToMissingElement(str(key))
            for value in values:
                if isinstance(value, ElementId) and value not in live_ids:
                    raise ReferenceToMissingElement(str(value))

    # Only canonical documents are well-formed: re-serialization must agree.
    if serialize(store) != data:
        raise MalformedSnapshot("document is not in canonical form", 1)
    return store


def save(store: Store, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(store))


def load(path) -> Store:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
