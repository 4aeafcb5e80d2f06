"""Reflective meta-model edits while instance data exists.

Every change is first analyzed against the live store; the resulting impact
report enumerates the model-level values the change would destroy.  In
``restrict`` mode (the default everywhere) a destructive change is rejected
with zero state delta; ``force`` applies it and clears exactly the reported
values, never more.  Application itself is a plain sequence of CRUD
operations run against a scratch copy and adopted atomically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import IntegrityViolation, ParseError, TypeMismatch, UnknownIdentifier
from .kernel import (
    META_MODEL_LEVEL,
    MODEL_LEVEL,
    MetaKind,
    Potency,
    Verdict,
    verdict_or_forbidden,
)
from .levels import declared_potency, matches_primitive
from .literals import MALFORMED, VOID
from .metaconstructor import _sorted_ids, create, delete, update
from .persistence import deserialize, serialize
from .store import ElementId, Store

OPERATIONS = (
    "add_feature",
    "remove_feature",
    "retype_feature_datatype",
    "remove_class",
    "add_class",
    "change_potency",
)

_FEATURE_KINDS = (MetaKind.ATTRIBUTE, MetaKind.COMPOSITION, MetaKind.ASSOCIATION)
_LIST_FOR_KIND = {
    MetaKind.ATTRIBUTE: "attributes",
    MetaKind.COMPOSITION: "compositions",
    MetaKind.ASSOCIATION: "associations",
}


@dataclass(frozen=True)
class MetaChange:
    """One reflective edit; unused detail fields stay None."""

    operation: str
    subject: ElementId
    feature: ElementId | None = None
    datatype: ElementId | None = None
    potency_value: int | None = None
    per_level: bool | None = None
    name: str | None = None


@dataclass
class ImpactReport:
    verdict: str  # "safe" | "destructive"
    affected_instances: list[ElementId] = field(default_factory=list)
    affected_slots: int = 0
    reasons: list[tuple[ElementId, str]] = field(default_factory=list)

    @property
    def safe(self) -> bool:
        return self.verdict == "safe"

    @property
    def lines(self) -> list[str]:
        return [
            f"error {subject} reflect.destructive: {message}"
            for subject, message in self.reasons
        ]


def _require(store: Store, eid: ElementId, kind: MetaKind) -> None:
    if not store.is_live(eid):
        raise UnknownIdentifier(str(eid))
    if eid.kind is not kind:
        raise TypeMismatch(str(eid))


def _value_holders(store: Store, decl: ElementId) -> list[tuple[ElementId, list]]:
    out = []
    for index, rec in store.live[MetaKind.INSTANCE].items():
        values = rec.get(decl)
        if values:
            out.append((ElementId(MetaKind.INSTANCE, index), values))
    return out


def _owner_class(store: Store, decl: ElementId) -> ElementId | None:
    list_name = _LIST_FOR_KIND[decl.kind]
    for index, rec in store.live[MetaKind.CLASS].items():
        if decl in rec.get(list_name, ()):
            return ElementId(MetaKind.CLASS, index)
    return None


def _family_instances(store: Store, class_id: ElementId) -> list[ElementId]:
    from .levels import conforms_to

    out = []
    for index, rec in store.live[MetaKind.INSTANCE].items():
        meta = rec.get("meta")
        if meta and store.is_live(meta[0]) and conforms_to(store, meta[0], class_id):
            out.append(ElementId(MetaKind.INSTANCE, index))
    return out


def _new_primitive(store: Store, datatype: ElementId) -> str | None:
    prim = store.fetch(datatype).get("primitive")
    return prim[0] if prim else None


def _instance_closure(store: Store, roots: list[ElementId]) -> list[ElementId]:
    """Composition-containment closure of instances, in discovery order."""
    order: list[ElementId] = []
    seen: set[ElementId] = set()
    stack = list(reversed(roots))
    while stack:
        current = stack.pop()
        if current in seen or not store.is_live(current):
            continue
        seen.add(current)
        order.append(current)
        rec = store.fetch(current)
        children = []
        for key in rec:
            if isinstance(key, ElementId) and key.kind is MetaKind.COMPOSITION:
                children.extend(rec[key])
        stack.extend(reversed(children))
    return order


def impact_of(change: MetaChange, store: Store) -> ImpactReport:
    """Enumerate the instance values ``change`` would destroy; pure."""
    op = change.operation
    if op not in OPERATIONS:
        raise ParseError(MALFORMED)

    if op == "add_class":
        _require(store, change.subject, MetaKind.NAMESPACE)
        return ImpactReport("safe")

    if op == "add_feature":
        _require(store, change.subject, MetaKind.CLASS)
        if change.feature is None or change.feature.kind not in _FEATURE_KINDS:
            raise TypeMismatch(str(change.feature))
        if not store.is_live(change.feature):
            raise UnknownIdentifier(str(change.feature))
        affected = _family_instances(store, change.subject)
        return ImpactReport("safe", affected, 0, [])

    if op == "remove_feature":
        subject = change.subject
        if not store.is_live(subject):
            raise UnknownIdentifier(str(subject))
        if subject.kind not in _FEATURE_KINDS:
            raise TypeMismatch(str(subject))
        owner = _owner_class(store, subject)
        affected = _family_instances(store, owner) if owner else []
        slots = 0
        reasons = []
        for inst, values in _value_holders(store, subject):
            slots += len(values)
            reasons.append((inst, f"{subject} holds {len(values)} values"))
            if inst not in affected:
                affected.append(inst)
        affected.sort(key=lambda e: e.sort_key)
        verdict = "destructive" if slots else "safe"
        return ImpactReport(verdict, affected, slots, reasons)

    if op == "retype_feature_datatype":
        _require(store, change.subject, MetaKind.ATTRIBUTE)
        if change.datatype is None:
            raise TypeMismatch("datatype")
        _require(store, change.datatype, MetaKind.DATA_TYPE)
        new_prim = _new_primitive(store, change.datatype)
        slots = 0
        affected = []
        reasons = []
        for inst, values in _value_holders(store, change.subject):
            bad = sum(
                1
                for v in values
                if new_prim is None or not matches_primitive(v, new_prim)
            )
            if bad:
                slots += bad
                affected.append(inst)
                reasons.append(
                    (inst, f"{change.subject} holds {bad} incompatible values")
                )
        verdict = "destructive" if slots else "safe"
        return ImpactReport(verdict, affected, slots, reasons)

    if op == "remove_class":
        _require(store, change.subject, MetaKind.CLASS)
        roots = [
            ElementId(MetaKind.INSTANCE, index)
            for index, rec in store.live[MetaKind.INSTANCE].items()
            if rec.get("meta") and rec["meta"][0] == change.subject
        ]
        closure = _instance_closure(store, roots)
        closure_set = set(closure)
        slots = 0
        affected = list(closure)
        reasons = [(inst, "would be deleted") for inst in closure]
        for inst in closure:
            slots += sum(len(v) for v in store.fetch(inst).values())
        for index, rec in store.live[MetaKind.INSTANCE].items():
            holder = ElementId(MetaKind.INSTANCE, index)
            if holder in closure_set:
                continue
            hit = 0
            for key, values in rec.items():
                if isinstance(key, ElementId):
                    hit += sum(1 for v in values if v in closure_set)
            if hit:
                slots += hit
                affected.append(holder)
                reasons.append((holder, f"references {hit} deleted values"))
        affected.sort(key=lambda e: e.sort_key)
        verdict = "destructive" if slots else "safe"
        return ImpactReport(verdict, affected, slots, reasons)

    # change_potency
    _require(store, change.subject, MetaKind.ATTRIBUTE)
    current = declared_potency(store.fetch(change.subject))
    new_potency = Potency(
        change.potency_value if change.potency_value is not None else current.value,
        change.per_level if change.per_level is not None else current.per_level,
    )
    slots = 0
    affected = []
    reasons = []
    for inst, values in _value_holders(store, change.subject):
        level_vals = store.fetch(inst).get("level")
        level = level_vals[0] if level_vals else MODEL_LEVEL
        verdict = verdict_or_forbidden(META_MODEL_LEVEL, new_potency, level)
        if verdict is not Verdict.REQUIRED:
            slots += len(values)
            affected.append(inst)
            reasons.append((inst, f"{change.subject} holds {len(values)} forbidden values"))
    verdict = "destructive" if slots else "safe"
    return ImpactReport(verdict, affected, slots, reasons)


def _clear_slot(scratch: Store, inst: ElementId, decl: ElementId, predicate=None) -> None:
    values = list(scratch.fetch(inst).get(decl, ()))
    for pos in range(len(values), 0, -1):
        if predicate is None or predicate(values[pos - 1]):
            update(scratch, inst, decl, pos, VOID)


def _apply_steps(change: MetaChange, store: Store, scratch: Store) -> None:
    op = change.operation

    if op == "add_class":
        new_class = create(scratch, "Class")
        if change.name is not None:
            update(scratch, new_class, "name", 1, change.name)
        size = len(scratch.fetch(change.subject).get("classes", ()))
        update(scratch, change.subject, "classes", size + 1, new_class)
        return

    if op == "add_feature":
        list_name = _LIST_FOR_KIND[change.feature.kind]
        size = len(scratch.fetch(change.subject).get(list_name, ()))
        update(scratch, change.subject, list_name, size + 1, change.feature)
        return

    if op == "remove_feature":
        subject = change.subject
        for inst, _ in _value_holders(scratch, subject):
            _clear_slot(scratch, inst, subject)
        owner = _owner_class(scratch, subject)
        if owner is not None:
            list_name = _LIST_FOR_KIND[subject.kind]
            values = scratch.fetch(owner)[list_name]
            update(scratch, owner, list_name, values.index(subject) + 1, VOID)
        delete(scratch, subject)
        return

    if op == "retype_feature_datatype":
        new_prim = _new_primitive(scratch, change.datatype)
        for inst, _ in _value_holders(scratch, change.subject):
            _clear_slot(
                scratch,
                inst,
                change.subject,
                lambda v: new_prim is None or not matches_primitive(v, new_prim),
            )
        update(scratch, change.subject, "datatype", 1, change.datatype)
        return

    if op == "remove_class":
        roots = [
            ElementId(MetaKind.INSTANCE, index)
            for index, rec in scratch.live[MetaKind.INSTANCE].items()
            if rec.get("meta") and rec["meta"][0] == change.subject
        ]
        closure = set(_instance_closure(scratch, roots))
        # Clear association references into the closure everywhere, including
        # from inside it: otherwise sibling subtrees block each other's delete.
        for index in list(scratch.live[MetaKind.INSTANCE]):
            holder = ElementId(MetaKind.INSTANCE, index)
            if not scratch.is_live(holder):
                continue
            rec = scratch.fetch(holder)
            keys = sorted(
                (k for k in rec if isinstance(k, ElementId) and k.kind is MetaKind.ASSOCIATION),
                key=lambda e: e.sort_key,
            )
            for key in keys:
                _clear_slot(scratch, holder, key, lambda v: v in closure)
        for root in roots:
            if scratch.is_live(root):
                delete(scratch, root)
        delete(scratch, change.subject)
        return

    # change_potency
    current = declared_potency(scratch.fetch(change.subject))
    new_potency = Potency(
        change.potency_value if change.potency_value is not None else current.value,
        change.per_level if change.per_level is not None else current.per_level,
    )
    for inst, _ in _value_holders(scratch, change.subject):
        level_vals = scratch.fetch(inst).get("level")
        level = level_vals[0] if level_vals else MODEL_LEVEL
        if verdict_or_forbidden(META_MODEL_LEVEL, new_potency, level) is not Verdict.REQUIRED:
            _clear_slot(scratch, inst, change.subject)
    if change.potency_value is not None:
        update(scratch, change.subject, "potency", 1, change.potency_value)
    if change.per_level is not None:
        update(scratch, change.subject, "perlevel", 1, change.per_level)


def apply_change(change: MetaChange, mode: str, store: Store) -> ImpactReport:
    """Apply ``change`` under the given mode; atomic on any failure."""
    if mode not in ("restrict", "force"):
        raise ParseError(MALFORMED)
    report = impact_of(change, store)
    if mode == "restrict" and not report.safe:
        exc = IntegrityViolation(_sorted_ids(report.affected_instances))
        exc.report = report
        raise exc
    scratch = deserialize(serialize(store))
    _apply_steps(change, store, scratch)
    store.adopt(scratch)
    return report
