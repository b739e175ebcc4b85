"""Binding specs: how dataset fields populate a graph and which model scores
each label set.

A spec is plain JSON so the designer agents can draft it and humans can edit
it at the sensor gate:

    {
      "properties": [{"kind": "reader", "concept": "question",
                      "property": "text", "field": "questions"}],
      "edges":      [{"relation": "para_q", "field": "questions"}],
      "relations":  [{"relation": "transitive", "field": "triples"}],
      "models":     [{"label_set": "flip_label", "mode": "mock",
                      "prompt": "...", "labels": [...], "scores": {...}}]
    }

``kind`` is "reader" for ordinary properties and "label-reader" for gold
labels, which land on the instance's gold channel and never reach inference
scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import BindingError
from ..graphlang.nodes import CONTAINS, ENTITY, HAS_A, ConceptGraph

READER = "reader"
LABEL_READER = "label-reader"
MOCK = "mock"
REMOTE = "remote"


@dataclass(frozen=True)
class PropertyBinding:
    kind: str
    concept: str
    property: str
    field: str


@dataclass(frozen=True)
class EdgeBinding:
    relation: str
    field: str


@dataclass(frozen=True)
class RelationBinding:
    relation: str
    field: str


@dataclass(frozen=True)
class ModelConfig:
    label_set: str
    mode: str
    prompt: str
    labels: tuple[str, ...]
    scores: dict | None = None  # mock: one distribution for every instance
    scores_by_instance: dict | None = None  # mock: per-instance overrides
    model: str | None = None  # remote: model name sent with the request


@dataclass
class BindingSpec:
    properties: list[PropertyBinding] = field(default_factory=list)
    edges: list[EdgeBinding] = field(default_factory=list)
    relations: list[RelationBinding] = field(default_factory=list)
    models: list[ModelConfig] = field(default_factory=list)

    @staticmethod
    def from_json(data: dict) -> "BindingSpec":
        if not isinstance(data, dict):
            raise BindingError("binding spec must be a JSON object", code="bad-spec")

        def need(obj: dict, key: str, where: str) -> object:
            if key not in obj:
                raise BindingError(f"{where} is missing {key!r}", code="bad-spec")
            return obj[key]

        spec = BindingSpec()
        for p in data.get("properties", []):
            kind = need(p, "kind", "property binding")
            if kind not in (READER, LABEL_READER):
                raise BindingError(f"unknown reader kind {kind!r}", code="bad-spec")
            spec.properties.append(
                PropertyBinding(
                    kind,
                    need(p, "concept", "property binding"),
                    need(p, "property", "property binding"),
                    need(p, "field", "property binding"),
                )
            )
        for e in data.get("edges", []):
            spec.edges.append(
                EdgeBinding(need(e, "relation", "edge binding"), need(e, "field", "edge binding"))
            )
        for r in data.get("relations", []):
            spec.relations.append(
                RelationBinding(
                    need(r, "relation", "relation binding"), need(r, "field", "relation binding")
                )
            )
        for m in data.get("models", []):
            mode = need(m, "mode", "model binding")
            if mode not in (MOCK, REMOTE):
                raise BindingError(f"unknown model mode {mode!r}", code="bad-spec")
            labels = need(m, "labels", "model binding")
            if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
                raise BindingError("model labels must be a list of strings", code="bad-spec")
            if mode == MOCK and m.get("scores") is None and m.get("scores_by_instance") is None:
                raise BindingError(
                    f"mock model for {m.get('label_set')!r} needs scores", code="bad-spec"
                )
            spec.models.append(
                ModelConfig(
                    need(m, "label_set", "model binding"),
                    mode,
                    m.get("prompt", ""),
                    tuple(labels),
                    scores=m.get("scores"),
                    scores_by_instance=m.get("scores_by_instance"),
                    model=m.get("model"),
                )
            )
        return spec

    def to_json(self) -> dict:
        out: dict = {
            "properties": [
                {"kind": p.kind, "concept": p.concept, "property": p.property, "field": p.field}
                for p in self.properties
            ],
            "edges": [{"relation": e.relation, "field": e.field} for e in self.edges],
            "relations": [{"relation": r.relation, "field": r.field} for r in self.relations],
            "models": [],
        }
        for m in self.models:
            row: dict = {
                "label_set": m.label_set,
                "mode": m.mode,
                "prompt": m.prompt,
                "labels": list(m.labels),
            }
            if m.scores is not None:
                row["scores"] = m.scores
            if m.scores_by_instance is not None:
                row["scores_by_instance"] = m.scores_by_instance
            if m.model is not None:
                row["model"] = m.model
            out["models"].append(row)
        return out

    def validate(self, graph: ConceptGraph) -> None:
        """Raise BindingError unless every referenced name exists in the graph
        with the right kind and every model matches its label set."""
        label_sets = {ls.name: ls for ls in graph.label_sets()}
        for p in self.properties:
            c = graph.concept(p.concept)
            if c is None or c.kind != ENTITY:
                raise BindingError(
                    f"property binding references unknown concept {p.concept!r}",
                    code="unknown-concept",
                )
            if p.kind == LABEL_READER and not any(
                ls.name == p.property for ls in graph.label_sets_of(p.concept)
            ):
                raise BindingError(
                    f"label reader on {p.concept!r} names {p.property!r}, which is"
                    f" not one of its label sets",
                    code="unknown-label-set",
                )
        for e in self.edges:
            rel = graph.relation(e.relation)
            if rel is None:
                raise BindingError(
                    f"edge binding references unknown relation {e.relation!r}",
                    code="unknown-relation",
                )
            if rel.kind != CONTAINS:
                raise BindingError(
                    f"edge binding on {e.relation!r} needs a contains relation",
                    code="not-contains",
                )
        for r in self.relations:
            rel = graph.relation(r.relation)
            if rel is None:
                raise BindingError(
                    f"relation binding references unknown relation {r.relation!r}",
                    code="unknown-relation",
                )
            if rel.kind != HAS_A:
                raise BindingError(
                    f"relation binding on {r.relation!r} needs a has_a relation",
                    code="not-has-a",
                )
        seen_sets = set()
        for m in self.models:
            ls = label_sets.get(m.label_set)
            if ls is None:
                raise BindingError(
                    f"model binding references unknown label set {m.label_set!r}",
                    code="unknown-label-set",
                )
            if m.label_set in seen_sets:
                raise BindingError(
                    f"label set {m.label_set!r} has more than one model binding",
                    code="duplicate-model",
                )
            seen_sets.add(m.label_set)
            if tuple(m.labels) != tuple(ls.labels):
                raise BindingError(
                    f"model for {m.label_set!r} lists labels {list(m.labels)},"
                    f" the graph declares {list(ls.labels)}",
                    code="label-mismatch",
                )
