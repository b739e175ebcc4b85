from .bind import bind, bind_edges, bind_properties, bind_relations
from .model import alias_table, parse_answer, predict, render_prompt, score_table_json
from .records import DatasetRecord, load_records, parse_records
from .spec import (
    LABEL_READER,
    MOCK,
    READER,
    REMOTE,
    BindingSpec,
    EdgeBinding,
    ModelConfig,
    PropertyBinding,
    RelationBinding,
)

__all__ = [
    "bind",
    "bind_edges",
    "bind_properties",
    "bind_relations",
    "alias_table",
    "parse_answer",
    "predict",
    "render_prompt",
    "score_table_json",
    "DatasetRecord",
    "load_records",
    "parse_records",
    "BindingSpec",
    "EdgeBinding",
    "ModelConfig",
    "PropertyBinding",
    "RelationBinding",
    "LABEL_READER",
    "MOCK",
    "READER",
    "REMOTE",
]
