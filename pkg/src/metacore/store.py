"""Object-relational in-memory repository.

One slot list per kind; an element's identifier is its 1-based position in
that list and never changes.  Deleted slots become tombstones so no index is
ever reissued, within a session or across save/load.
"""

from __future__ import annotations

from typing import Iterator, Mapping, NamedTuple

from .errors import CapacityExceeded, InvalidCapacity, SingletonViolation, UnknownIdentifier
from .kernel import KIND_ORDER, KIND_RANK, MetaKind

DEFAULT_CAPACITY = 1024


class ElementId(NamedTuple):
    """Stable identifier: kind plus slot index, rendered ``Kind:index``."""

    kind: MetaKind
    index: int

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.index}"

    @property
    def sort_key(self) -> tuple[int, int]:
        return (KIND_RANK[self.kind], self.index)


ROOT_ID = ElementId(MetaKind.ROOT_FOLDER, 1)

# A record is a mapping from feature key to the ordered list of set values.
# Built-in features are keyed by name, dynamic instance features by the
# declaring element's ElementId.  Empty slots are simply absent.
Record = dict


_KINDS_BY_NAME = {k.value: k for k in KIND_ORDER}


def parse_id(token: str) -> ElementId | None:
    """Parse ``Kind:index`` or return None if the token is not id-shaped.

    Indices are canonical decimal: no sign, no leading zeros.
    """
    kind_name, sep, digits = token.partition(":")
    if not sep or not digits.isdigit():
        return None
    kind = _KINDS_BY_NAME.get(kind_name)
    if kind is None or digits != str(int(digits)):
        return None
    index = int(digits)
    if index < 1:
        return None
    return ElementId(kind, index)


class Store:
    """Fixed-capacity slot lists for all eleven kinds.

    Single-writer: callers must not mutate a store from two threads.  All
    integrity policy lives in the request engine; the store only guarantees
    identifier stability, capacity bounds and tombstone permanence.
    """

    def __init__(self, capacities: Mapping[MetaKind, int] | None = None):
        caps = dict.fromkeys(KIND_ORDER, DEFAULT_CAPACITY)
        if capacities:
            caps.update(capacities)
        for kind, cap in caps.items():
            if not isinstance(cap, int) or cap < 1:
                raise InvalidCapacity(f"{kind.value} {cap}")
        self.capacities: dict[MetaKind, int] = caps
        self.live: dict[MetaKind, dict[int, Record]] = {k: {} for k in KIND_ORDER}
        self.tombstones: dict[MetaKind, set[int]] = {k: set() for k in KIND_ORDER}
        self.fresh: dict[MetaKind, int] = dict.fromkeys(KIND_ORDER, 1)
        # The containment root exists from the start.
        self.live[MetaKind.ROOT_FOLDER][1] = {}
        self.fresh[MetaKind.ROOT_FOLDER] = 2

    # -- lifecycle ---------------------------------------------------------

    def allocate(self, kind: MetaKind) -> ElementId:
        """Hand out the next slot of ``kind``; indices are never reused."""
        if kind is MetaKind.ROOT_FOLDER:
            raise SingletonViolation("RootFolder")
        index = self.fresh[kind]
        if index > self.capacities[kind]:
            raise CapacityExceeded(kind.value)
        self.fresh[kind] = index + 1
        record: Record = {}
        eid = ElementId(kind, index)
        if kind is MetaKind.INSTANCE:
            record["identifier"] = [str(eid)]
        self.live[kind][index] = record
        return eid

    def fetch(self, eid: ElementId) -> Record:
        try:
            return self.live[eid.kind][eid.index]
        except KeyError:
            raise UnknownIdentifier(str(eid)) from None

    def is_live(self, eid: ElementId) -> bool:
        return eid.index in self.live[eid.kind]

    def tombstone(self, eid: ElementId) -> None:
        """Retire a live slot permanently."""
        if eid.index not in self.live[eid.kind]:
            raise UnknownIdentifier(str(eid))
        del self.live[eid.kind][eid.index]
        self.tombstones[eid.kind].add(eid.index)

    # -- iteration ---------------------------------------------------------

    def scan(self, kind: MetaKind) -> list[ElementId]:
        """All live ids of ``kind`` in ascending index order (the single
        normative iteration order)."""
        return [ElementId(kind, i) for i in sorted(self.live[kind])]

    def iter_live(self) -> Iterator[tuple[ElementId, Record]]:
        """Every live element in canonical order (kind order, then index)."""
        for kind in KIND_ORDER:
            table = self.live[kind]
            for index in sorted(table):
                yield ElementId(kind, index), table[index]

    def element_count(self) -> int:
        return sum(len(t) for t in self.live.values())

    # -- wholesale replacement (used for atomic multi-step application) -----

    def adopt(self, other: "Store") -> None:
        """Take over another store's entire state."""
        self.capacities = other.capacities
        self.live = other.live
        self.tombstones = other.tombstones
        self.fresh = other.fresh
