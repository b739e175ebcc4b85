"""Populate an InstanceSet from dataset records under a BindingSpec.

Roots are the concepts a record maps to directly: every concept named by a
property binding or as an edge parent, minus anything created as an edge
child.  Each record yields one instance per root (id = record id, suffixed
with the concept name only when there are several roots).

Edge children come from list fields.  A list element that is an object
carries its own properties (and may carry its own "id"); a scalar element is
resolved through the parallel-list rule: a child property binding whose field
names a list on the parent of matching length takes the element at the
child's position.  That covers token/tag datasets where `tokens` and `labels`
run side by side.

has_a tuples are lists of index lists, indices counting this record's
instances of each slot concept in creation order.  A record without the
bound field contributes no tuples.
"""

from __future__ import annotations

from ..errors import BindingError
from ..graphlang.ground import InstanceSet
from ..graphlang.nodes import ConceptGraph
from .records import DatasetRecord
from .spec import LABEL_READER, BindingSpec


def _root_concepts(spec: BindingSpec, graph: ConceptGraph) -> list[str]:
    bound = []
    for p in spec.properties:
        if p.concept not in bound:
            bound.append(p.concept)
    children = set()
    for e in spec.edges:
        rel = graph.relation(e.relation)
        if rel.parent not in bound:
            bound.append(rel.parent)
        children.update(rel.children)
    ordered = [c.name for c in graph.entity_concepts() if c.name in bound]
    return [c for c in ordered if c not in children]


def _set_property(inst, binding, value, graph: ConceptGraph) -> None:
    if binding.kind == LABEL_READER:
        ls = next(
            ls for ls in graph.label_sets_of(binding.concept) if ls.name == binding.property
        )
        if value not in ls.labels:
            raise BindingError(
                f"gold value {value!r} for {inst.id!r} is not a label of"
                f" {binding.property!r}",
                code="type-mismatch",
            )
        inst.gold[binding.property] = value
    else:
        inst.properties[binding.property] = value


class _RecordScope:
    """Per-record bookkeeping: which instances exist for each concept, and the
    source mapping (record fields or element object) each came from."""

    def __init__(self, record: DatasetRecord):
        self.record = record
        self.by_concept: dict[str, list[str]] = {}
        self.source: dict[str, dict] = {}
        self.position: dict[str, int] = {}

    def add(self, inst_id: str, concept: str, source: dict, position: int) -> None:
        self.by_concept.setdefault(concept, []).append(inst_id)
        self.source[inst_id] = source
        self.position[inst_id] = position


def bind(records, spec: BindingSpec, graph: ConceptGraph) -> InstanceSet:
    """Run all property, edge, and relation bindings; returns the populated
    InstanceSet ready for grounding."""
    spec.validate(graph)
    instances = InstanceSet()
    roots = _root_concepts(spec, graph)
    props_of: dict[str, list] = {}
    for p in spec.properties:
        props_of.setdefault(p.concept, []).append(p)

    for record in records:
        scope = _RecordScope(record)
        for concept in roots:
            inst_id = record.id if len(roots) == 1 else f"{record.id}.{concept}"
            inst = instances.add_instance(inst_id, concept)
            scope.add(inst_id, concept, record.fields, 0)
            for binding in props_of.get(concept, ()):
                if binding.field not in record.fields:
                    raise BindingError(
                        f"record {record.id!r} is missing field {binding.field!r}",
                        code="missing-field",
                    )
                _set_property(inst, binding, record.fields[binding.field], graph)

        for e in spec.edges:
            rel = graph.relation(e.relation)
            child_concept = rel.children[0]
            for parent_id in list(scope.by_concept.get(rel.parent, ())):
                source = scope.source[parent_id]
                if e.field not in source:
                    raise BindingError(
                        f"record {record.id!r}: {parent_id!r} is missing edge field"
                        f" {e.field!r}",
                        code="missing-field",
                    )
                elements = source[e.field]
                if not isinstance(elements, list):
                    raise BindingError(
                        f"record {record.id!r}: edge field {e.field!r} is not a list",
                        code="type-mismatch",
                    )
                for i, elem in enumerate(elements):
                    obj = elem if isinstance(elem, dict) else {}
                    child_id = obj.get("id") or f"{parent_id}.{e.relation}.{i}"
                    child = instances.add_instance(child_id, child_concept)
                    scope.add(child_id, child_concept, obj, i)
                    for binding in props_of.get(child_concept, ()):
                        if binding.field in obj:
                            value = obj[binding.field]
                        else:
                            parallel = source.get(binding.field)
                            if isinstance(parallel, list) and len(parallel) == len(elements):
                                value = parallel[i]
                            else:
                                raise BindingError(
                                    f"record {record.id!r}: cannot resolve field"
                                    f" {binding.field!r} for {child_id!r}",
                                    code="missing-field",
                                )
                        _set_property(instances.get(child_id), binding, value, graph)
                    instances.add_tuple(e.relation, (parent_id, child_id))

        for r in spec.relations:
            rel = graph.relation(r.relation)
            entries = record.fields.get(r.field)
            if entries is None:
                continue  # absent field: no tuples from this record
            if not isinstance(entries, list):
                raise BindingError(
                    f"record {record.id!r}: relation field {r.field!r} is not a list",
                    code="type-mismatch",
                )
            for entry in entries:
                if not isinstance(entry, (list, tuple)) or len(entry) != rel.arity:
                    raise BindingError(
                        f"record {record.id!r}: tuple {entry!r} for {r.relation!r}"
                        f" needs arity {rel.arity}",
                        code="arity-mismatch",
                    )
                ids = []
                for index, concept in zip(entry, rel.children):
                    pool = scope.by_concept.get(concept, [])
                    if not isinstance(index, int) or not 0 <= index < len(pool):
                        raise BindingError(
                            f"record {record.id!r}: index {index!r} out of range for"
                            f" {concept!r} ({len(pool)} instances)",
                            code="index-out-of-range",
                        )
                    ids.append(pool[index])
                instances.add_tuple(r.relation, tuple(ids))

    return instances


def bind_properties(records, spec: BindingSpec, graph: ConceptGraph) -> InstanceSet:
    """Root instances with their properties only (no edges, no tuples)."""
    spec.validate(graph)
    instances = InstanceSet()
    roots = _root_concepts(spec, graph)
    for record in records:
        for concept in roots:
            inst_id = record.id if len(roots) == 1 else f"{record.id}.{concept}"
            inst = instances.add_instance(inst_id, concept)
            for binding in spec.properties:
                if binding.concept != concept:
                    continue
                if binding.field not in record.fields:
                    raise BindingError(
                        f"record {record.id!r} is missing field {binding.field!r}",
                        code="missing-field",
                    )
                _set_property(inst, binding, record.fields[binding.field], graph)
    return instances


def bind_edges(records, spec: BindingSpec, graph: ConceptGraph) -> list[tuple[str, str, str]]:
    """All containment edges as (relation, parent id, child id), in order."""
    trimmed = BindingSpec(properties=list(spec.properties), edges=list(spec.edges))
    instances = bind(records, trimmed, graph)
    return [
        (rel, parent, child)
        for rel in instances.relations
        for parent, child in instances.tuples_of(rel)
    ]


def bind_relations(records, spec: BindingSpec, graph: ConceptGraph) -> dict[str, list[tuple]]:
    """has_a tuples per relation name."""
    instances = bind(records, spec, graph)
    return {
        r.relation: list(instances.tuples_of(r.relation)) for r in spec.relations
    }
