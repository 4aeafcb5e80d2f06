"""The CRUD engine: parses request lines, validates, applies atomically.

The four verbs are the only mutation path into a store.  Validation is
strictly ordered -- identifier, feature, type, position, potency,
cardinality, integrity -- and the first failure wins; nothing is mutated
until every check has passed, so a failed request leaves the store
byte-identical under canonical serialization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import (
    CardinalityViolation,
    FrozenFeature,
    IntegrityViolation,
    LevelViolation,
    MetaError,
    ParseError,
    PositionOutOfRange,
    PotencyViolation,
    RootDeletion,
    TypeMismatch,
    UnknownFeature,
    UnknownIdentifier,
)
from .kernel import (
    CATALOG_BY_NAME,
    CATALOGS,
    CLASSIFICATIONS,
    DEFAULT_ATTRIBUTE_UPPER,
    META_MODEL_LEVEL,
    MODEL_LEVEL,
    PRIMITIVES,
    FeatureDescriptor,
    MetaKind,
    Potency,
    Verdict,
    kind_of_token,
    verdict_or_forbidden,
)
from .levels import (
    class_chain,
    conforms_to,
    declared_potency,
    effective_slot_map,
    matches_primitive,
    parent_superclass,
)
from .literals import MALFORMED, STAR, VOID, parse_literal, render_value, tokenize
from .store import ROOT_ID, ElementId, Record, Store, parse_id

_VERBS = ("create", "read", "update", "delete")
_DECLARATION_LISTS = ("attributes", "compositions", "associations")


@dataclass(frozen=True)
class CrudRequest:
    verb: str
    target: object  # ElementId, or kind-name token for create
    feature: object = None  # str or ElementId
    position: int | None = None
    value: object = None


@dataclass(frozen=True)
class CrudResponse:
    ok: bool
    payload: str = ""
    code: str = ""
    detail: str = ""

    @property
    def line(self) -> str:
        if self.ok:
            return f"ok {self.payload}" if self.payload else "ok"
        return f"error {self.code} {self.detail}"


def _element_id(token: str) -> ElementId:
    eid = parse_id(token)
    if eid is None:
        raise ParseError(MALFORMED)
    return eid


def _feature_token(token: str):
    if token.startswith('"') or not token:
        raise ParseError(MALFORMED)
    if ":" in token:
        return _element_id(token)
    return token


def parse_request(line: str) -> CrudRequest:
    """Parse one request line; grammar errors are ParseError."""
    tokens = tokenize(line)
    if not tokens:
        raise ParseError(MALFORMED)
    verb = tokens[0]
    if verb == "create" and len(tokens) == 2:
        token = tokens[1]
        if token.startswith('"') or not token:
            raise ParseError(MALFORMED)
        target = _element_id(token) if ":" in token else token
        return CrudRequest("create", target)
    if verb == "read" and len(tokens) == 3:
        return CrudRequest("read", _element_id(tokens[1]), _feature_token(tokens[2]))
    if verb == "update" and len(tokens) == 5:
        pos_token = tokens[3]
        if not pos_token.isdigit() or str(int(pos_token)) != pos_token or int(pos_token) < 1:
            raise ParseError(MALFORMED)
        return CrudRequest(
            "update",
            _element_id(tokens[1]),
            _feature_token(tokens[2]),
            int(pos_token),
            parse_literal(tokens[4]),
        )
    if verb == "delete" and len(tokens) == 2:
        return CrudRequest("delete", _element_id(tokens[1]))
    raise ParseError(MALFORMED)


# ---------------------------------------------------------------------------
# Shared resolution helpers


class _Slot(NamedTuple):
    key: object  # str or ElementId
    token: str  # feature spelling for error details
    is_list: bool
    bound: object  # int, STAR, or None for unbounded built-in lists
    containment: bool
    desc: FeatureDescriptor | None  # built-in descriptor
    decl_rec: Record | None  # declaring element record for dynamic slots


def _resolve_slot(store: Store, eid: ElementId, rec: Record, feature) -> _Slot:
    """Locate the addressed slot; raises UnknownFeature/FrozenFeature."""
    if isinstance(feature, str):
        if feature == "identifier":
            raise FrozenFeature("identifier")
        desc = CATALOG_BY_NAME[eid.kind].get(feature)
        if desc is None:
            raise UnknownFeature(feature)
        if desc.frozen:
            raise FrozenFeature(feature)
        return _Slot(feature, feature, desc.arity == "list", None, desc.containment, desc, None)
    if eid.kind is not MetaKind.INSTANCE:
        raise UnknownFeature(str(feature))
    slot_map = effective_slot_map(store, rec)
    if feature not in slot_map:
        raise UnknownFeature(str(feature))
    decl_rec = store.fetch(feature)
    upper = decl_rec.get("upper")
    if feature.kind is MetaKind.ATTRIBUTE:
        bound = upper[0] if upper else DEFAULT_ATTRIBUTE_UPPER
    else:
        bound = upper[0] if upper else STAR
    return _Slot(
        feature,
        str(feature),
        True,
        bound,
        feature.kind is MetaKind.COMPOSITION,
        None,
        decl_rec,
    )


def _read_resolved(store: Store, eid: ElementId, rec: Record, feature) -> list:
    if isinstance(feature, str):
        if feature == "identifier":
            return [str(eid)]
        if feature not in CATALOG_BY_NAME[eid.kind]:
            raise UnknownFeature(feature)
        return list(rec.get(feature, ()))
    if eid.kind is not MetaKind.INSTANCE:
        raise UnknownFeature(str(feature))
    if feature not in effective_slot_map(store, rec):
        raise UnknownFeature(str(feature))
    return list(rec.get(feature, ()))


def _check_ref(store: Store, value, expected_kind: MetaKind, token: str) -> None:
    if not isinstance(value, ElementId) or value.kind is not expected_kind:
        raise TypeMismatch(token)
    if not store.is_live(value):
        raise UnknownIdentifier(str(value))


def _check_type(store: Store, slot: _Slot, value) -> None:
    token = slot.token
    if slot.desc is not None:
        vk = slot.desc.value_kind
        if isinstance(vk, MetaKind):
            _check_ref(store, value, vk, token)
            return
        if vk == "string":
            if type(value) is not str:
                raise TypeMismatch(token)
        elif vk == "integer":
            if type(value) is not int or (value < 0 and slot.key != "level"):
                raise TypeMismatch(token)
        elif vk == "boolean":
            if value is not True and value is not False:
                raise TypeMismatch(token)
        elif vk == "bound":
            if value is not STAR and (type(value) is not int or value < 0):
                raise TypeMismatch(token)
        elif vk == "classification":
            if value not in CLASSIFICATIONS:
                raise TypeMismatch(token)
        elif vk == "primitive":
            if value not in PRIMITIVES:
                raise TypeMismatch(token)
        return
    # Dynamic slot: typed by the declaring element.
    decl: ElementId = slot.key
    decl_rec = slot.decl_rec
    if decl.kind is MetaKind.ATTRIBUTE:
        dt = decl_rec.get("datatype")
        primitive = None
        if dt and store.is_live(dt[0]):
            prim = store.fetch(dt[0]).get("primitive")
            primitive = prim[0] if prim else None
        if primitive is None or not matches_primitive(value, primitive):
            raise TypeMismatch(token)
        return
    # Composition/association value: a live instance conforming to the target.
    _check_ref(store, value, MetaKind.INSTANCE, token)
    target = decl_rec.get("target")
    if not target:
        raise TypeMismatch(token)
    value_meta = store.fetch(value).get("meta")
    if (
        not value_meta
        or not store.is_live(value_meta[0])
        or not conforms_to(store, value_meta[0], target[0])
    ):
        raise TypeMismatch(token)


def _check_position(slot: _Slot, values, position: int, removing: bool) -> None:
    size = len(values)
    if removing:
        if not 1 <= position <= size:
            raise PositionOutOfRange(str(position))
    elif slot.is_list:
        if not 1 <= position <= size + 1:
            raise PositionOutOfRange(str(position))
    elif position != 1:
        raise PositionOutOfRange(str(position))


def _check_potency(slot: _Slot, rec: Record) -> None:
    decl: ElementId = slot.key
    if decl.kind is not MetaKind.ATTRIBUTE:
        return
    level_vals = rec.get("level")
    level = level_vals[0] if level_vals else MODEL_LEVEL
    verdict = verdict_or_forbidden(
        META_MODEL_LEVEL, declared_potency(slot.decl_rec), level
    )
    if verdict is not Verdict.REQUIRED:
        raise PotencyViolation(slot.token)


def _check_cardinality(slot: _Slot, values, position: int) -> None:
    if slot.is_list and position == len(values) + 1:
        bound = slot.bound
        if isinstance(bound, int) and len(values) + 1 > bound:
            raise CardinalityViolation(slot.token)


# ---------------------------------------------------------------------------
# Integrity: scans over the unidirectional reference graph


def _sorted_ids(ids) -> str:
    return " ".join(str(i) for i in sorted(set(ids), key=lambda e: e.sort_key))


def _containment_keys(kind: MetaKind, rec: Record):
    for desc in CATALOGS[kind]:
        if desc.containment:
            yield desc.name
    if kind is MetaKind.INSTANCE:
        for key in rec:
            if isinstance(key, ElementId) and key.kind is MetaKind.COMPOSITION:
                yield key


def _container_of(store: Store, target: ElementId):
    """(holder, key, position) of the containment slot holding ``target``."""
    for holder, rec in store.iter_live():
        for key in _containment_keys(holder.kind, rec):
            values = rec.get(key)
            if not values:
                continue
            for pos, value in enumerate(values, start=1):
                if value == target:
                    return holder, key, pos
    return None


def _containment_ancestors(store: Store, start: ElementId) -> list[ElementId]:
    chain = []
    seen = {start}
    current = start
    while True:
        found = _container_of(store, current)
        if found is None:
            return chain
        current = found[0]
        if current in seen:
            return chain
        seen.add(current)
        chain.append(current)


def _instances_with_values(store: Store, decl: ElementId) -> list[ElementId]:
    """Instances holding at least one value in the slot declared by ``decl``."""
    out = []
    for index, rec in store.live[MetaKind.INSTANCE].items():
        if rec.get(decl):
            out.append(ElementId(MetaKind.INSTANCE, index))
    return out


def _linked_subclass(store: Store, inh: ElementId) -> ElementId | None:
    """The class whose parent slot references this inheritance record."""
    for index, rec in store.live[MetaKind.CLASS].items():
        parent = rec.get("parent")
        if parent and parent[0] == inh:
            return ElementId(MetaKind.CLASS, index)
    return None


def _chain_with_edge(
    store: Store, class_id: ElementId, superclass: ElementId | None
) -> list[ElementId]:
    """Parent chain of ``class_id`` assuming its direct superclass were
    ``superclass`` (total walk, cycle-truncated)."""
    chain = [class_id]
    seen = {class_id}
    current = superclass
    while current is not None and current not in seen:
        chain.append(current)
        seen.add(current)
        current = parent_superclass(store, current)
    return chain


def _declarations_of_chain(store: Store, chain: list[ElementId]) -> set[ElementId]:
    decls = set()
    for origin in chain:
        rec = store.live[MetaKind.CLASS].get(origin.index)
        if rec is None:
            continue
        for list_name in _DECLARATION_LISTS:
            decls.update(rec.get(list_name, ()))
    return decls


def _family_instances(store: Store, class_id: ElementId) -> list[ElementId]:
    """Instances whose meta class is ``class_id`` or one of its subclasses."""
    out = []
    for index, rec in store.live[MetaKind.INSTANCE].items():
        meta = rec.get("meta")
        if meta and store.is_live(meta[0]) and conforms_to(store, meta[0], class_id):
            out.append(ElementId(MetaKind.INSTANCE, index))
    return out


def _guard_departing_declarations(
    store: Store, class_id: ElementId, departing: set[ElementId]
) -> None:
    """Reject a meta-model edit that would orphan set values: no instance in
    the class's family may hold values in a slot that is departing."""
    if not departing:
        return
    blockers = []
    for inst in _family_instances(store, class_id):
        rec = store.fetch(inst)
        if any(rec.get(decl) for decl in departing):
            blockers.append(inst)
    if blockers:
        raise IntegrityViolation(_sorted_ids(blockers))


def _guard_parent_change(store: Store, class_id: ElementId, new_value) -> None:
    """Inheritance link update: consistency, acyclicity, then value safety."""
    if new_value is not VOID:
        inh_rec = store.fetch(new_value)
        sub = inh_rec.get("subclass")
        if not sub or sub[0] != class_id:
            raise IntegrityViolation(str(new_value))
        sup = inh_rec.get("superclass")
        new_sup = sup[0] if sup and store.is_live(sup[0]) else None
        if new_sup is not None:
            if new_sup == class_id or class_id in class_chain(store, new_sup)[0]:
                raise IntegrityViolation(str(new_value))
    else:
        new_sup = None
    old_chain, _ = class_chain(store, class_id)
    new_chain = _chain_with_edge(store, class_id, new_sup)
    departing = _declarations_of_chain(store, old_chain) - _declarations_of_chain(
        store, new_chain
    )
    _guard_departing_declarations(store, class_id, departing)


def _guard_inheritance_record(store: Store, inh: ElementId, key: str, value) -> None:
    linked = _linked_subclass(store, inh)
    if key == "subclass":
        if linked is not None and (value is VOID or value != linked):
            raise IntegrityViolation(str(linked))
        return
    # superclass
    if linked is None:
        return
    new_sup = None if value is VOID else value
    if new_sup is not None:
        if new_sup == linked or linked in class_chain(store, new_sup)[0]:
            raise IntegrityViolation(str(value))
    old_chain, _ = class_chain(store, linked)
    new_chain = _chain_with_edge(store, linked, new_sup)
    departing = _declarations_of_chain(store, old_chain) - _declarations_of_chain(
        store, new_chain
    )
    _guard_departing_declarations(store, linked, departing)


def _guard_attribute_change(store: Store, attr: ElementId, rec: Record, key: str, value) -> None:
    holders = _instances_with_values(store, attr)
    if not holders:
        return
    blockers = []
    if key in ("potency", "perlevel"):
        potency = declared_potency(rec)
        if key == "potency":
            new_potency = Potency(
                value if value is not VOID else 1, potency.per_level
            )
        else:
            new_potency = Potency(
                potency.value, value if value is not VOID else False
            )
        for inst in holders:
            level_vals = store.fetch(inst).get("level")
            level = level_vals[0] if level_vals else MODEL_LEVEL
            if verdict_or_forbidden(META_MODEL_LEVEL, new_potency, level) is not Verdict.REQUIRED:
                blockers.append(inst)
    elif key == "datatype":
        primitive = None
        if value is not VOID and store.is_live(value):
            prim = store.fetch(value).get("primitive")
            primitive = prim[0] if prim else None
        for inst in holders:
            values = store.fetch(inst).get(attr, ())
            if primitive is None or not all(
                matches_primitive(v, primitive) for v in values
            ):
                blockers.append(inst)
    elif key == "upper":
        bound = DEFAULT_ATTRIBUTE_UPPER if value is VOID else value
        if bound is not STAR:
            for inst in holders:
                if len(store.fetch(inst).get(attr, ())) > bound:
                    blockers.append(inst)
    if blockers:
        raise IntegrityViolation(_sorted_ids(blockers))


def _guard_datatype_change(store: Store, datatype: ElementId, value) -> None:
    primitive = None if value is VOID else value
    blockers = []
    for index, attr_rec in store.live[MetaKind.ATTRIBUTE].items():
        dt = attr_rec.get("datatype")
        if not dt or dt[0] != datatype:
            continue
        attr = ElementId(MetaKind.ATTRIBUTE, index)
        for inst in _instances_with_values(store, attr):
            values = store.fetch(inst).get(attr, ())
            if primitive is None or not all(
                matches_primitive(v, primitive) for v in values
            ):
                blockers.append(inst)
    if blockers:
        raise IntegrityViolation(_sorted_ids(blockers))


def _guard_relation_change(store: Store, decl: ElementId, key: str, value) -> None:
    holders = _instances_with_values(store, decl)
    if not holders:
        return
    blockers = []
    if key == "target":
        for inst in holders:
            for v in store.fetch(inst).get(decl, ()):
                value_meta = store.fetch(v).get("meta") if store.is_live(v) else None
                if (
                    value is VOID
                    or not value_meta
                    or not store.is_live(value_meta[0])
                    or not conforms_to(store, value_meta[0], value)
                ):
                    blockers.append(inst)
                    break
    elif key == "upper":
        bound = STAR if value is VOID else value
        if bound is not STAR:
            for inst in holders:
                if len(store.fetch(inst).get(decl, ())) > bound:
                    blockers.append(inst)
    if blockers:
        raise IntegrityViolation(_sorted_ids(blockers))


def _guard_declaration_list_change(
    store: Store, class_id: ElementId, values, position: int, value
) -> None:
    """Void/replace on a class declaration list: the departing declaration
    must not carry instance values anywhere in the family."""
    if position > len(values):
        return  # append: nothing departs
    departing = values[position - 1]
    if value is not VOID and value == departing:
        return
    _guard_departing_declarations(store, class_id, {departing})


def _check_integrity(
    store: Store,
    eid: ElementId,
    rec: Record,
    slot: _Slot,
    position: int,
    value,
    values,
) -> None:
    key = slot.key
    kind = eid.kind

    if value is VOID and key in ("meta", "classification"):
        raise IntegrityViolation(str(eid))

    if key == "meta":
        level_vals = rec.get("level")
        level = level_vals[0] if level_vals else MODEL_LEVEL
        if level + 1 != META_MODEL_LEVEL:
            raise LevelViolation(str(value))
        new_map = effective_slot_map(store, {"meta": [value]})
        carrying = [
            k
            for k in rec
            if isinstance(k, ElementId) and rec.get(k) and k not in new_map
        ]
        if carrying:
            raise IntegrityViolation(_sorted_ids(carrying))
        return

    if kind is MetaKind.CLASS and key == "parent":
        _guard_parent_change(store, eid, value)
        return

    if kind is MetaKind.INHERITANCE and key in ("subclass", "superclass"):
        _guard_inheritance_record(store, eid, key, value)
        return

    if kind is MetaKind.ATTRIBUTE and key in ("potency", "perlevel", "datatype", "upper"):
        _guard_attribute_change(store, eid, rec, key, value)
        return

    if kind is MetaKind.DATA_TYPE and key == "primitive":
        _guard_datatype_change(store, eid, value)
        return

    if kind in (MetaKind.COMPOSITION, MetaKind.ASSOCIATION) and key in ("target", "upper"):
        _guard_relation_change(store, eid, key, value)
        return

    if kind is MetaKind.CLASS and key in _DECLARATION_LISTS:
        _guard_declaration_list_change(store, eid, values, position, value)
        if value is VOID:
            return
        # fall through: list entries are containment references

    if slot.containment and value is not VOID:
        child = value
        if child == eid or child in _containment_ancestors(store, eid):
            raise IntegrityViolation(str(child))
        found = _container_of(store, child)
        if found is not None and found != (eid, key, position):
            raise IntegrityViolation(str(found[0]))


def _apply(rec: Record, slot: _Slot, position: int, value) -> None:
    key = slot.key
    if value is VOID:
        values = rec[key]
        del values[position - 1]
        if not values:
            del rec[key]
        return
    values = rec.get(key)
    if values is None:
        rec[key] = [value]
    elif position == len(values) + 1:
        values.append(value)
    else:
        values[position - 1] = value


# ---------------------------------------------------------------------------
# The four verbs


def create(store: Store, target) -> ElementId:
    """Instantiate a kind (level 2) or a class (level 1)."""
    if isinstance(target, ElementId):
        store.fetch(target)
        if target.kind is not MetaKind.CLASS:
            raise LevelViolation(str(target))
        eid = store.allocate(MetaKind.INSTANCE)
        rec = store.fetch(eid)
        rec["meta"] = [target]
        rec["level"] = [MODEL_LEVEL]
        rec["classification"] = ["logical"]
        return eid
    kind = kind_of_token(target)
    if kind is MetaKind.INSTANCE:
        raise LevelViolation("Instance")
    eid = store.allocate(kind)
    if kind is MetaKind.CLASS:
        store.fetch(eid)["classification"] = ["logical"]
    return eid


def read(store: Store, eid: ElementId, feature) -> list:
    """Ordered values of one slot; never mutates."""
    rec = store.fetch(eid)
    return _read_resolved(store, eid, rec, feature)


def update(store: Store, eid: ElementId, feature, position: int, value) -> None:
    """Replace, append or (with ``void``) remove exactly one slot entry."""
    rec = store.fetch(eid)
    slot = _resolve_slot(store, eid, rec, feature)
    if value is not VOID:
        _check_type(store, slot, value)
    values = rec.get(slot.key, ())
    _check_position(slot, values, position, removing=value is VOID)
    if value is not VOID and slot.decl_rec is not None:
        _check_potency(slot, rec)
    if value is not VOID:
        _check_cardinality(slot, values, position)
    _check_integrity(store, eid, rec, slot, position, value, values)
    _apply(rec, slot, position, value)


def delete(store: Store, eid: ElementId) -> None:
    """Delete an element and its owned subtree; rejected while any outside
    reference or populated dynamic slot still targets the subtree."""
    store.fetch(eid)
    if eid == ROOT_ID:
        raise RootDeletion(str(ROOT_ID))

    subtree_order: list[ElementId] = []
    subtree: set[ElementId] = set()
    stack = [eid]
    while stack:
        current = stack.pop()
        if current in subtree or not store.is_live(current):
            continue
        subtree.add(current)
        subtree_order.append(current)
        rec = store.fetch(current)
        children = []
        for key in _containment_keys(current.kind, rec):
            children.extend(v for v in rec.get(key, ()) if isinstance(v, ElementId))
        stack.extend(reversed(children))

    blockers = []
    for holder, rec in store.iter_live():
        if holder in subtree:
            continue
        for key, vals in rec.items():
            if isinstance(key, ElementId) and key in subtree and vals:
                blockers.append(holder)
                break
            containment = False
            if isinstance(key, ElementId):
                containment = key.kind is MetaKind.COMPOSITION
            else:
                desc = CATALOG_BY_NAME[holder.kind].get(key)
                containment = desc is not None and desc.containment
            hit = False
            for v in vals:
                if isinstance(v, ElementId) and v in subtree:
                    if containment and v == eid:
                        continue  # the root's own container: detached below
                    hit = True
                    break
            if hit:
                blockers.append(holder)
                break
    if blockers:
        raise IntegrityViolation(_sorted_ids(blockers))

    found = _container_of(store, eid)
    if found is not None:
        holder, key, pos = found
        holder_rec = store.fetch(holder)
        del holder_rec[key][pos - 1]
        if not holder_rec[key]:
            del holder_rec[key]
    for member in subtree_order:
        store.tombstone(member)


def execute(request: CrudRequest, store: Store) -> CrudResponse:
    """Dispatch one request; errors become responses, never state changes."""
    try:
        if request.verb == "create":
            return CrudResponse(True, str(create(store, request.target)))
        if request.verb == "read":
            values = read(store, request.target, request.feature)
            return CrudResponse(True, " ".join(render_value(v) for v in values))
        if request.verb == "update":
            update(store, request.target, request.feature, request.position, request.value)
            return CrudResponse(True)
        if request.verb == "delete":
            delete(store, request.target)
            return CrudResponse(True)
        raise ParseError(MALFORMED)
    except MetaError as exc:
        return CrudResponse(False, "", exc.code, exc.detail)


def execute_line(line: str, store: Store) -> str:
    """Parse and execute one request line, returning the response line."""
    try:
        request = parse_request(line)
    except MetaError as exc:
        return CrudResponse(False, "", exc.code, exc.detail).line
    return execute(request, store).line
