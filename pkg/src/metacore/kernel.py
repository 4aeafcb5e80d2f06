"""Immutable meta-language level: element kinds, feature catalogs, potency.

Everything in this module is pure data shared by every store.  Nothing here
may change at runtime; the eleven element kinds and their feature catalogs
are the fixed vocabulary in which all meta-models (level 2) and domain
models (level 1) are expressed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import PotencyViolation, UnknownKind


class MetaKind(Enum):
    """The closed set of element kinds.  Declaration order is canonical."""

    ROOT_FOLDER = "RootFolder"
    NAMESPACE = "Namespace"
    CLASS = "Class"
    ATTRIBUTE = "Attribute"
    DATA_TYPE = "DataType"
    UNIT = "Unit"
    COMPOSITION = "Composition"
    INHERITANCE = "Inheritance"
    ASSOCIATION = "Association"
    CONSTRAINT = "Constraint"
    INSTANCE = "Instance"


KIND_ORDER: tuple[MetaKind, ...] = tuple(MetaKind)
KIND_RANK: dict[MetaKind, int] = {kind: rank for rank, kind in enumerate(KIND_ORDER)}
_KIND_BY_NAME: dict[str, MetaKind] = {kind.value: kind for kind in KIND_ORDER}

# Levels are numbered M3=3 (this module), M2=2 (meta-models), M1=1 (models).
META_LANGUAGE_LEVEL = 3
META_MODEL_LEVEL = 2
MODEL_LEVEL = 1

PRIMITIVES = ("boolean", "integer", "real", "string")
CLASSIFICATIONS = ("logical", "physical")

SCALAR = "scalar"
LIST = "list"


@dataclass(frozen=True)
class FeatureDescriptor:
    """One built-in feature of a kind.

    ``value_kind`` is a token for primitive-valued features ("string",
    "integer", "boolean", "bound", "classification", "primitive") or a
    :class:`MetaKind` for reference features.  ``bound`` accepts a
    non-negative integer or the unbounded marker ``*``.
    """

    name: str
    arity: str  # SCALAR or LIST
    value_kind: object
    frozen: bool = False
    containment: bool = False


def _f(name, arity, value_kind, frozen=False, containment=False):
    return FeatureDescriptor(name, arity, value_kind, frozen, containment)


# Normative catalogs.  Order is fixed: it is the serialization order and the
# documented wire order.  Reference features marked as containment form the
# ownership forest rooted at RootFolder:1.
CATALOGS: dict[MetaKind, tuple[FeatureDescriptor, ...]] = {
    MetaKind.ROOT_FOLDER: (
        _f("name", SCALAR, "string"),
        _f("namespaces", LIST, MetaKind.NAMESPACE, containment=True),
    ),
    MetaKind.NAMESPACE: (
        _f("name", SCALAR, "string"),
        _f("classes", LIST, MetaKind.CLASS, containment=True),
        _f("namespaces", LIST, MetaKind.NAMESPACE, containment=True),
        _f("constraints", LIST, MetaKind.CONSTRAINT, containment=True),
    ),
    MetaKind.CLASS: (
        _f("name", SCALAR, "string"),
        _f("classification", SCALAR, "classification"),
        _f("attributes", LIST, MetaKind.ATTRIBUTE, containment=True),
        _f("parent", SCALAR, MetaKind.INHERITANCE, containment=True),
        _f("compositions", LIST, MetaKind.COMPOSITION, containment=True),
        _f("associations", LIST, MetaKind.ASSOCIATION, containment=True),
    ),
    MetaKind.ATTRIBUTE: (
        _f("name", SCALAR, "string"),
        _f("datatype", SCALAR, MetaKind.DATA_TYPE),
        _f("unit", SCALAR, MetaKind.UNIT),
        _f("potency", SCALAR, "integer"),
        _f("perlevel", SCALAR, "boolean"),
        _f("lower", SCALAR, "integer"),
        _f("upper", SCALAR, "bound"),
    ),
    MetaKind.DATA_TYPE: (
        _f("name", SCALAR, "string"),
        _f("primitive", SCALAR, "primitive"),
    ),
    MetaKind.UNIT: (
        _f("name", SCALAR, "string"),
        _f("symbol", SCALAR, "string"),
    ),
    MetaKind.COMPOSITION: (
        _f("name", SCALAR, "string"),
        _f("source", SCALAR, MetaKind.CLASS),
        _f("target", SCALAR, MetaKind.CLASS),
        _f("lower", SCALAR, "integer"),
        _f("upper", SCALAR, "bound"),
    ),
    MetaKind.INHERITANCE: (
        _f("subclass", SCALAR, MetaKind.CLASS),
        _f("superclass", SCALAR, MetaKind.CLASS),
    ),
    MetaKind.ASSOCIATION: (
        _f("name", SCALAR, "string"),
        _f("source", SCALAR, MetaKind.CLASS),
        _f("target", SCALAR, MetaKind.CLASS),
        _f("lower", SCALAR, "integer"),
        _f("upper", SCALAR, "bound"),
    ),
    MetaKind.CONSTRAINT: (
        _f("name", SCALAR, "string"),
        _f("expression", SCALAR, "string"),
    ),
    MetaKind.INSTANCE: (
        _f("name", SCALAR, "string"),
        _f("identifier", SCALAR, "string", frozen=True),
        _f("meta", SCALAR, MetaKind.CLASS),
        _f("level", SCALAR, "integer", frozen=True),
        _f("classification", SCALAR, "classification"),
    ),
}

CATALOG_BY_NAME: dict[MetaKind, dict[str, FeatureDescriptor]] = {
    kind: {desc.name: desc for desc in descs} for kind, descs in CATALOGS.items()
}

# Defaults applied when the declaring element leaves these unset.
DEFAULT_POTENCY = 1
DEFAULT_PER_LEVEL = False
DEFAULT_LOWER = 0
DEFAULT_ATTRIBUTE_UPPER = 1  # compositions/associations default to unbounded


def feature_catalog(kind: MetaKind) -> tuple[FeatureDescriptor, ...]:
    """Fixed, ordered feature catalog of ``kind``."""
    return CATALOGS[kind]


def kind_of_token(token: str) -> MetaKind:
    """Resolve a canonical kind name (case-sensitive)."""
    try:
        return _KIND_BY_NAME[token]
    except KeyError:
        raise UnknownKind(token) from None


@dataclass(frozen=True)
class Potency:
    """Deep-instantiation marker: value decremented per level below the
    declaration; ``per_level`` additionally requires a value at every
    intermediate level."""

    value: int
    per_level: bool = False


class Verdict(Enum):
    REQUIRED = "Required"
    ALLOWED = "Allowed"
    FORBIDDEN = "Forbidden"


def potency_at(declared_level: int, potency: Potency, query_level: int) -> Verdict:
    """Assignment verdict for a feature declared at ``declared_level`` when
    queried at ``query_level``.

    The potency value names the level ``declared_level - value`` at which a
    value must be assigned; the per-level marker extends the requirement to
    every level strictly between declaration and that floor.
    """
    if not 1 <= query_level < declared_level:
        raise PotencyViolation(
            f"query level {query_level} outside 1..{declared_level - 1}"
        )
    if not 1 <= potency.value <= declared_level - 1:
        raise PotencyViolation(
            f"potency {potency.value} outside 1..{declared_level - 1}"
        )
    floor = declared_level - potency.value
    if potency.per_level and floor <= query_level <= declared_level - 1:
        return Verdict.REQUIRED
    if query_level == floor:
        return Verdict.REQUIRED
    return Verdict.FORBIDDEN


def verdict_or_forbidden(declared_level: int, potency: Potency, query_level: int) -> Verdict:
    """Total variant of :func:`potency_at`: precondition breaches are treated
    as FORBIDDEN instead of raising.  Used wherever a stored (possibly wrong)
    potency declaration must still yield a deterministic verdict."""
    try:
        return potency_at(declared_level, potency, query_level)
    except PotencyViolation:
        return Verdict.FORBIDDEN
