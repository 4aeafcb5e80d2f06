"""Level semantics: effective features, conformance validation, retyping.

The effective feature set of a class is its own declarations plus the
transitively inherited ones, each carrying an assignment verdict derived
from its potency at the queried level.  Validation is a read-only sweep
that reports completeness and structural problems as ordered diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InheritanceCycle, UnknownIdentifier
from .kernel import (
    CATALOG_BY_NAME,
    CATALOGS,
    CLASSIFICATIONS,
    DEFAULT_ATTRIBUTE_UPPER,
    DEFAULT_LOWER,
    DEFAULT_PER_LEVEL,
    DEFAULT_POTENCY,
    KIND_RANK,
    META_LANGUAGE_LEVEL,
    META_MODEL_LEVEL,
    MODEL_LEVEL,
    MetaKind,
    Potency,
    Verdict,
    verdict_or_forbidden,
)
from .literals import STAR
from .store import ROOT_ID, ElementId, Record, Store

# Feature lists on Class holding declarations, in effective order.
_DECLARATION_LISTS = ("attributes", "compositions", "associations")

# Built-ins contributed by the meta-language itself (declared at level 3,
# per-level down to level 1): present on every element, every level.
_BUILTIN_POTENCY = Potency(META_LANGUAGE_LEVEL - MODEL_LEVEL, per_level=True)


@dataclass(frozen=True)
class EffectiveFeature:
    """One slot an instance of a class carries at a given level."""

    feature: object  # str for meta-language built-ins, ElementId otherwise
    origin: ElementId | None  # declaring class; None for built-ins
    verdict: Verdict
    lower: int
    upper: object  # int or STAR


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    subject: ElementId
    rule: str
    message: str

    @property
    def line(self) -> str:
        return f"{self.severity} {self.subject} {self.rule}: {self.message}"

    @property
    def sort_key(self):
        return (*self.subject.sort_key, self.rule, self.message)


def parent_superclass(store: Store, class_id: ElementId) -> ElementId | None:
    """Resolved inheritance edge of a class, or None."""
    rec = store.live[MetaKind.CLASS].get(class_id.index)
    if rec is None:
        return None
    parent = rec.get("parent")
    if not parent:
        return None
    inh = store.live[MetaKind.INHERITANCE].get(parent[0].index)
    if inh is None:
        return None
    sup = inh.get("superclass")
    if not sup or not store.is_live(sup[0]):
        return None
    return sup[0]


def class_chain(store: Store, class_id: ElementId) -> tuple[list[ElementId], bool]:
    """The class followed by its ancestors; second value reports whether the
    walk was truncated by a cycle.  Total: never raises on corrupt stores."""
    chain = [class_id]
    seen = {class_id}
    current = class_id
    while True:
        sup = parent_superclass(store, current)
        if sup is None:
            return chain, False
        if sup in seen:
            return chain, True
        chain.append(sup)
        seen.add(sup)
        current = sup


def conforms_to(store: Store, meta_id: ElementId, target_id: ElementId) -> bool:
    """True when ``meta_id`` is ``target_id`` or one of its subclasses."""
    chain, _ = class_chain(store, meta_id)
    return target_id in chain


def declared_potency(attribute_rec: Record) -> Potency:
    value = attribute_rec.get("potency")
    per_level = attribute_rec.get("perlevel")
    return Potency(
        value[0] if value else DEFAULT_POTENCY,
        per_level[0] if per_level else DEFAULT_PER_LEVEL,
    )


def declared_bounds(decl_kind: MetaKind, decl_rec: Record) -> tuple[int, object]:
    lower = decl_rec.get("lower")
    upper = decl_rec.get("upper")
    if decl_kind is MetaKind.ATTRIBUTE:
        default_upper: object = DEFAULT_ATTRIBUTE_UPPER
    else:
        default_upper = STAR
    return (
        lower[0] if lower else DEFAULT_LOWER,
        upper[0] if upper else default_upper,
    )


def effective_declarations(
    store: Store, class_id: ElementId
) -> tuple[list[tuple[ElementId, ElementId]], bool]:
    """(declaring id, origin class) pairs in effective order: own first, then
    up the parent chain; within one class, declaration list order."""
    chain, cyclic = class_chain(store, class_id)
    out = []
    for origin in chain:
        rec = store.live[MetaKind.CLASS].get(origin.index)
        if rec is None:
            continue
        for list_name in _DECLARATION_LISTS:
            for decl in rec.get(list_name, ()):
                out.append((decl, origin))
    return out, cyclic


def effective_slot_map(store: Store, instance_rec: Record) -> dict[ElementId, ElementId]:
    """Declaring id -> origin class for the dynamic slots an instance carries.

    Instances without a resolvable meta class carry no dynamic slots."""
    meta = instance_rec.get("meta")
    if not meta or not store.is_live(meta[0]) or meta[0].kind is not MetaKind.CLASS:
        return {}
    pairs, _ = effective_declarations(store, meta[0])
    return dict(pairs)


def effective_features(
    store: Store, class_id: ElementId, level: int
) -> list[EffectiveFeature]:
    """Ordered effective feature set of ``class_id`` at ``level``.

    Built-ins (name, identifier) lead; class-declared features follow in
    effective order.  Raises InheritanceCycle on a corrupt parent chain."""
    if class_id.kind is not MetaKind.CLASS or not store.is_live(class_id):
        raise UnknownIdentifier(str(class_id))
    builtin_verdict = verdict_or_forbidden(META_LANGUAGE_LEVEL, _BUILTIN_POTENCY, level)
    feats = [
        EffectiveFeature("name", None, builtin_verdict, 1, 1),
        EffectiveFeature("identifier", None, builtin_verdict, 1, 1),
    ]
    pairs, cyclic = effective_declarations(store, class_id)
    if cyclic:
        raise InheritanceCycle(str(class_id))
    for decl, origin in pairs:
        decl_rec = store.fetch(decl)
        lower, upper = declared_bounds(decl.kind, decl_rec)
        if decl.kind is MetaKind.ATTRIBUTE:
            verdict = verdict_or_forbidden(
                META_MODEL_LEVEL, declared_potency(decl_rec), level
            )
        else:
            verdict = Verdict.ALLOWED if level == MODEL_LEVEL else Verdict.FORBIDDEN
        feats.append(EffectiveFeature(decl, origin, verdict, lower, upper))
    return feats


def retype(store: Store, instance_id: ElementId, new_meta: ElementId) -> None:
    """Re-point an instance's meta class, refusing any silent value loss."""
    from .metaconstructor import update

    update(store, instance_id, "meta", 1, new_meta)


# ---------------------------------------------------------------------------
# Whole-model validation


def _resolved_primitive(store: Store, attribute_rec: Record) -> str | None:
    dt = attribute_rec.get("datatype")
    if not dt or not store.is_live(dt[0]) or dt[0].kind is not MetaKind.DATA_TYPE:
        return None
    prim = store.fetch(dt[0]).get("primitive")
    return prim[0] if prim else None


def matches_primitive(value, primitive: str) -> bool:
    if primitive == "boolean":
        return value is True or value is False
    if primitive == "integer":
        return type(value) is int
    if primitive == "real":
        return type(value) is float
    if primitive == "string":
        return type(value) is str
    return False


def _containment_keys(kind: MetaKind, rec: Record):
    for desc in CATALOGS[kind]:
        if desc.containment:
            yield desc.name
    if kind is MetaKind.INSTANCE:
        for key in rec:
            if isinstance(key, ElementId) and key.kind is MetaKind.COMPOSITION:
                yield key


def validate_model(store: Store) -> list[Diagnostic]:
    """Read-only conformance sweep; diagnostics in canonical order."""
    out: list[Diagnostic] = []

    def err(subject, rule, message):
        out.append(Diagnostic("error", subject, rule, message))

    def warn(subject, rule, message):
        out.append(Diagnostic("warning", subject, rule, message))

    # Containment map: child -> [(holder, key)].
    containers: dict[ElementId, list[ElementId]] = {}
    for holder, rec in store.iter_live():
        for key in _containment_keys(holder.kind, rec):
            for child in rec.get(key, ()):
                if isinstance(child, ElementId):
                    containers.setdefault(child, []).append(holder)

    for child, holders in containers.items():
        if len(holders) > 1:
            err(
                child,
                "containment.multiple",
                " ".join(str(h) for h in sorted(holders, key=lambda h: h.sort_key)),
            )

    # Containment cycles: walk up from every contained element.
    for child in containers:
        seen = {child}
        current = child
        while True:
            holders = containers.get(current)
            if not holders:
                break
            current = holders[0]
            if current in seen:
                err(child, "containment.cycle", "containment cycle")
                break
            seen.add(current)

    for eid, rec in store.iter_live():
        kind = eid.kind
        catalog = CATALOG_BY_NAME[kind]

        if "name" in catalog and eid != ROOT_ID and not rec.get("name"):
            err(eid, "potency.required", "name not set")
        if "classification" in catalog and not rec.get("classification"):
            err(eid, "classification.missing", "classification not set")

        if kind in (MetaKind.COMPOSITION, MetaKind.ASSOCIATION, MetaKind.INHERITANCE):
            for feature in ("source", "target", "subclass", "superclass"):
                if feature not in catalog:
                    continue
                vals = rec.get(feature)
                if vals and not (
                    isinstance(vals[0], ElementId)
                    and vals[0].kind is MetaKind.CLASS
                    and store.is_live(vals[0])
                ):
                    err(eid, "endpoint.invalid", feature)

        if kind is MetaKind.ATTRIBUTE:
            if not rec.get("datatype"):
                err(eid, "attribute.datatype.missing", "datatype not set")
            if not rec.get("unit"):
                err(eid, "attribute.unit.missing", "unit not set")
            potency = rec.get("potency")
            if potency and not 1 <= potency[0] <= META_MODEL_LEVEL - 1:
                warn(
                    eid,
                    "potency.range",
                    f"potency {potency[0]} outside 1..{META_MODEL_LEVEL - 1}",
                )

        if kind is MetaKind.CLASS:
            parent = rec.get("parent")
            if parent:
                inh = parent[0]
                if inh.kind is MetaKind.INHERITANCE and store.is_live(inh):
                    sub = store.fetch(inh).get("subclass")
                    if not sub or sub[0] != eid:
                        err(eid, "inheritance.mismatch", str(inh))
                else:
                    err(eid, "endpoint.invalid", "parent")
            _, cyclic = class_chain(store, eid)
            if cyclic:
                err(eid, "inheritance.cycle", "inheritance cycle")

        if kind is MetaKind.INSTANCE:
            if not rec.get("meta"):
                err(eid, "meta.missing", "meta not set")
                continue
            level_vals = rec.get("level")
            level = level_vals[0] if level_vals else MODEL_LEVEL
            slot_map = effective_slot_map(store, rec)
            for key in rec:
                if isinstance(key, ElementId) and key not in slot_map:
                    err(eid, "feature.orphan", str(key))
            for decl in slot_map:
                decl_rec = store.fetch(decl)
                values = rec.get(decl, ())
                lower, upper = declared_bounds(decl.kind, decl_rec)
                if decl.kind is MetaKind.ATTRIBUTE:
                    verdict = verdict_or_forbidden(
                        META_MODEL_LEVEL, declared_potency(decl_rec), level
                    )
                    if verdict is Verdict.REQUIRED and not values:
                        err(eid, "potency.required", f"{decl} has no value")
                    if verdict is Verdict.FORBIDDEN and values:
                        err(eid, "potency.forbidden", f"{decl} value set at forbidden level")
                    if values:
                        primitive = _resolved_primitive(store, decl_rec)
                        if primitive is None:
                            err(eid, "datatype.mismatch", f"{decl} undefined datatype")
                        else:
                            for pos, value in enumerate(values, start=1):
                                if not matches_primitive(value, primitive):
                                    err(eid, "datatype.mismatch", f"{decl} position {pos}")
                                    break
                else:
                    verdict = Verdict.ALLOWED
                    target = decl_rec.get("target")
                    for pos, value in enumerate(values, start=1):
                        ok = (
                            isinstance(value, ElementId)
                            and value.kind is MetaKind.INSTANCE
                            and store.is_live(value)
                        )
                        if ok:
                            value_meta = store.fetch(value).get("meta")
                            ok = bool(
                                target
                                and value_meta
                                and store.is_live(value_meta[0])
                                and conforms_to(store, value_meta[0], target[0])
                            )
                        if not ok:
                            err(eid, "datatype.mismatch", f"{decl} position {pos}")
                            break
                if isinstance(upper, int) and len(values) > upper:
                    err(eid, "cardinality.upper", f"{decl} size {len(values)} exceeds {upper}")
                if verdict is not Verdict.FORBIDDEN and len(values) < lower:
                    err(eid, "cardinality.lower", f"{decl} size {len(values)} below {lower}")

    out.sort(key=lambda d: d.sort_key)
    return out
