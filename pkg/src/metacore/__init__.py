"""metacore: a deterministic multi-level model repository.

Meta-models (level 2) and domain models (level 1) are edited exclusively
through atomic CRUD requests against a fixed meta-language (level 3), with
deep instantiation, integrity-preserving reflective meta-model changes and
a byte-canonical snapshot format.
"""

from .errors import MetaError
from .kernel import (
    MetaKind,
    Potency,
    Verdict,
    feature_catalog,
    kind_of_token,
    potency_at,
)
from .levels import (
    Diagnostic,
    EffectiveFeature,
    effective_features,
    retype,
    validate_model,
)
from .metaconstructor import (
    CrudRequest,
    CrudResponse,
    create,
    delete,
    execute,
    execute_line,
    parse_request,
    read,
    update,
)
from .persistence import deserialize, load, save, serialize
from .reflection import ImpactReport, MetaChange, apply_change, impact_of
from .store import ElementId, Store, parse_id

__all__ = [
    "CrudRequest",
    "CrudResponse",
    "Diagnostic",
    "EffectiveFeature",
    "ElementId",
    "ImpactReport",
    "MetaChange",
    "MetaError",
    "MetaKind",
    "Potency",
    "Store",
    "Verdict",
    "apply_change",
    "create",
    "delete",
    "deserialize",
    "effective_features",
    "execute",
    "execute_line",
    "feature_catalog",
    "impact_of",
    "kind_of_token",
    "load",
    "parse_id",
    "parse_request",
    "potency_at",
    "read",
    "retype",
    "save",
    "serialize",
    "update",
    "validate_model",
]

__version__ = "0.1.0"
