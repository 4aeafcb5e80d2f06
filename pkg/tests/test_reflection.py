"""Reflective meta-model edits: impact analysis, restrict/force application."""

import pytest

from metacore import (
    ElementId,
    MetaChange,
    MetaKind,
    Store,
    apply_change,
    execute_line,
    impact_of,
    serialize,
    validate_model,
)
from metacore.errors import IntegrityViolation, TypeMismatch, UnknownIdentifier

ATTR1 = ElementId(MetaKind.ATTRIBUTE, 1)
CLASS1 = ElementId(MetaKind.CLASS, 1)
NS1 = ElementId(MetaKind.NAMESPACE, 1)


def build(store, *lines):
    for line in lines:
        response = execute_line(line, store)
        assert response.startswith("ok"), f"{line} -> {response}"


def model_value_count(store):
    """Total set values across instance records (the test's own measure)."""
    total = 0
    for index in store.live[MetaKind.INSTANCE]:
        rec = store.live[MetaKind.INSTANCE][index]
        total += sum(len(values) for values in rec.values())
    return total


def typed_class(store):
    build(store,
          "create Class",
          "create DataType", 'update DataType:1 primitive 1 "integer"',
          "create Attribute", "update Attribute:1 datatype 1 DataType:1",
          "update Class:1 attributes 1 Attribute:1")


def clone(store):
    from metacore import deserialize

    return deserialize(serialize(store))


def test_add_feature_is_safe_and_lists_gaining_instances(store):
    typed_class(store)
    for _ in range(10):
        build(store, "create Class:1")
    build(store, "create Attribute")
    change = MetaChange("add_feature", CLASS1, feature=ElementId(MetaKind.ATTRIBUTE, 2))
    report = impact_of(change, store)
    assert report.verdict == "safe"
    assert len(report.affected_instances) == 10
    assert report.affected_slots == 0


def test_remove_feature_counts_set_values(store):
    typed_class(store)
    for i in range(1, 6):
        build(store, "create Class:1")
    for i in (1, 2, 3):
        build(store, f"update Instance:{i} Attribute:1 1 {i * 10}")
    report = impact_of(MetaChange("remove_feature", ATTR1), store)
    assert report.verdict == "destructive"
    assert report.affected_slots == 3
    assert len(report.affected_instances) == 5  # all lose the slot


def test_change_potency_to_forbidden_is_destructive(store):
    typed_class(store)
    build(store, "create Class:1", "update Instance:1 Attribute:1 1 42")
    report = impact_of(MetaChange("change_potency", ATTR1, potency_value=2), store)
    assert report.verdict == "destructive"
    assert report.affected_slots == 1


def test_impact_is_pure(store):
    typed_class(store)
    build(store, "create Class:1", "update Instance:1 Attribute:1 1 42")
    before = serialize(store)
    impact_of(MetaChange("remove_class", CLASS1), store)
    impact_of(MetaChange("remove_feature", ATTR1), store)
    assert serialize(store) == before


def test_impact_validates_subject():
    store = Store()
    with pytest.raises(UnknownIdentifier):
        impact_of(MetaChange("remove_class", CLASS1), store)
    build(store, "create Namespace")
    with pytest.raises(TypeMismatch):
        impact_of(MetaChange("remove_class", NS1), store)


def test_restrict_rejects_destructive_with_zero_delta(store):
    typed_class(store)
    build(store, "create Class:1", "update Instance:1 Attribute:1 1 42")
    before = serialize(store)
    with pytest.raises(IntegrityViolation) as excinfo:
        apply_change(MetaChange("remove_class", CLASS1), "restrict", store)
    assert serialize(store) == before
    assert excinfo.value.report.verdict == "destructive"


def test_restrict_applies_safe_changes(store):
    build(store, "create Namespace")
    report = apply_change(MetaChange("add_class", NS1, name="Engine"), "restrict", store)
    assert report.verdict == "safe"
    assert execute_line("read Namespace:1 classes", store) == "ok Class:1"
    assert execute_line("read Class:1 name", store) == 'ok "Engine"'


def test_force_remove_feature_clears_exactly_reported(store):
    typed_class(store)
    for i in range(1, 4):
        build(store, "create Class:1", f"update Instance:{i} Attribute:1 1 {i}")
    report = impact_of(MetaChange("remove_feature", ATTR1), store)
    before = model_value_count(store)
    applied = apply_change(MetaChange("remove_feature", ATTR1), "force", store)
    assert applied.affected_slots == report.affected_slots == 3
    assert before - model_value_count(store) == 3
    assert not store.is_live(ATTR1)
    assert execute_line("read Class:1 attributes", store) == "ok"
    assert execute_line("read Instance:1 Attribute:1", store) == \
        "error UnknownFeature Attribute:1"


def test_force_remove_class_accounts_for_closure_and_references():
    store2 = Store()
    build(store2,
          "create Class", "create Class",
          "create Composition",
          "update Composition:1 source 1 Class:1",
          "update Composition:1 target 1 Class:2",
          "update Class:1 compositions 1 Composition:1",
          "create Association",
          "update Association:1 source 1 Class:2",
          "update Association:1 target 1 Class:2",
          "update Class:2 associations 1 Association:1",
          "create Class:1", "create Class:2", "create Class:2",
          # Instance:1 (of Class:1) contains Instance:2 (of Class:2)
          "update Instance:1 Composition:1 1 Instance:2",
          # Instance:3 (of Class:2, survives) references Instance:2
          "update Instance:3 Association:1 1 Instance:2")
    report = impact_of(MetaChange("remove_class", CLASS1), store2)
    # closure: Instance:1 (4 built-ins) + Instance:2 (4 built-ins + 0) ... plus
    # containment entry in Instance:1 and the external reference in Instance:3.
    before = model_value_count(store2)
    applied = apply_change(MetaChange("remove_class", CLASS1), "force", store2)
    assert applied.affected_slots == report.affected_slots
    assert before - model_value_count(store2) == report.affected_slots
    assert not store2.is_live(CLASS1)
    assert not store2.is_live(ElementId(MetaKind.INSTANCE, 1))
    assert not store2.is_live(ElementId(MetaKind.INSTANCE, 2))
    assert store2.is_live(ElementId(MetaKind.INSTANCE, 3))
    assert execute_line("read Instance:3 Association:1", store2) == "ok"
    assert not [d for d in validate_model(store2)
                if d.rule in ("datatype.mismatch", "endpoint.invalid")]


def test_force_remove_class_still_blocked_by_meta_structure(store):
    build(store,
          "create Class", "create Class",
          "create Inheritance",
          "update Inheritance:1 subclass 1 Class:2",
          "update Inheritance:1 superclass 1 Class:1",
          "update Class:2 parent 1 Inheritance:1")
    before = serialize(store)
    with pytest.raises(IntegrityViolation):
        apply_change(MetaChange("remove_class", CLASS1), "force", store)
    assert serialize(store) == before


def test_retype_datatype_safe_when_primitive_matches(store):
    typed_class(store)
    build(store, "create DataType", 'update DataType:2 primitive 1 "integer"',
          "create Class:1", "update Instance:1 Attribute:1 1 42")
    change = MetaChange("retype_feature_datatype", ATTR1,
                        datatype=ElementId(MetaKind.DATA_TYPE, 2))
    report = apply_change(change, "restrict", store)
    assert report.verdict == "safe" and report.affected_slots == 0
    assert execute_line("read Instance:1 Attribute:1", store) == "ok 42"


def test_retype_datatype_force_clears_incompatible_only(store):
    typed_class(store)
    build(store, "create DataType", 'update DataType:2 primitive 1 "string"',
          "create Class:1", "update Instance:1 Attribute:1 1 42")
    change = MetaChange("retype_feature_datatype", ATTR1,
                        datatype=ElementId(MetaKind.DATA_TYPE, 2))
    with pytest.raises(IntegrityViolation):
        apply_change(change, "restrict", store)
    report = apply_change(change, "force", store)
    assert report.affected_slots == 1
    assert execute_line("read Instance:1 Attribute:1", store) == "ok"
    assert execute_line('update Instance:1 Attribute:1 1 "text"', store) == "ok"


def test_force_change_potency_clears_then_updates(store):
    typed_class(store)
    build(store, "create Class:1", "update Instance:1 Attribute:1 1 42")
    report = apply_change(MetaChange("change_potency", ATTR1, potency_value=2),
                          "force", store)
    assert report.affected_slots == 1
    assert execute_line("read Attribute:1 potency", store) == "ok 2"
    assert execute_line("read Instance:1 Attribute:1", store) == "ok"
    assert execute_line("update Instance:1 Attribute:1 1 7", store) == \
        "error PotencyViolation Attribute:1"


def test_restrict_never_reduces_model_values(store):
    typed_class(store)
    build(store, "create Namespace", "create Class:1",
          "update Instance:1 Attribute:1 1 42")
    count = model_value_count(store)
    apply_change(MetaChange("add_class", NS1), "restrict", store)
    build(store, "create Attribute")
    apply_change(MetaChange("add_feature", CLASS1,
                            feature=ElementId(MetaKind.ATTRIBUTE, 2)), "restrict", store)
    with pytest.raises(IntegrityViolation):
        apply_change(MetaChange("remove_feature", ATTR1), "restrict", store)
    assert model_value_count(store) == count


def test_validate_after_applied_change_shows_no_structural_errors(store):
    typed_class(store)
    build(store, "create Unit", 'update Unit:1 symbol 1 "-"',
          "update Attribute:1 unit 1 Unit:1",
          "create Class:1", "update Instance:1 Attribute:1 1 42")
    apply_change(MetaChange("remove_feature", ATTR1), "force", store)
    structural = {"containment.multiple", "containment.cycle", "endpoint.invalid",
                  "datatype.mismatch", "cardinality.upper", "feature.orphan"}
    assert not {d.rule for d in validate_model(store)} & structural
