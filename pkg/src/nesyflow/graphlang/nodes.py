"""AST node types for the conceptual-graph language.

A graph is three ordered declaration lists: concepts (plain entities and
label-sets), relations (one-to-many containment and k-ary role-named has_a),
and named constraint templates.  Constraint bodies are finite expression
trees over label atoms ("var is label") and relation atoms ("rel(v1, v2)").

Spans are carried for diagnostics but excluded from equality, so two parses
of the same text (or of pretty-printed output) compare equal as values.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Span:
    line: int
    col: int


NO_SPAN = Span(0, 0)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: Span = NO_SPAN

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "line": self.span.line,
            "col": self.span.col,
        }


def error(code: str, message: str, span: Span = NO_SPAN) -> Diagnostic:
    return Diagnostic("error", code, message, span)


def warning(code: str, message: str, span: Span = NO_SPAN) -> Diagnostic:
    return Diagnostic("warning", code, message, span)


# --- declarations ---------------------------------------------------------

ENTITY = "entity"
LABEL_SET = "label-set"
CONTAINS = "contains"
HAS_A = "has_a"


@dataclass
class ConceptDecl:
    """An entity concept, or a label-set attached to a parent concept."""

    name: str
    kind: str  # ENTITY | LABEL_SET
    labels: tuple[str, ...] = ()
    parent: str | None = None
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class RelationDecl:
    """contains: one parent concept, exactly one child slot.
    has_a: two or more role-named slots; the relation name is its own scope.
    """

    name: str
    kind: str  # CONTAINS | HAS_A
    parent: str
    children: tuple[str, ...]
    roles: tuple[str, ...]
    span: Span = field(default=NO_SPAN, compare=False)

    @property
    def arity(self) -> int:
        return len(self.children)


# --- constraint expressions ------------------------------------------------


@dataclass
class Atom:
    """Label atom: the variable's instance carries the given label."""

    var: str
    label: str
    # resolved during parse: the label-set declaring `label` and the
    # concept the variable ranges over
    concept: str | None = field(default=None, compare=False)
    label_set: str | None = field(default=None, compare=False)
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class RelAtom:
    """Relation atom: the bound variable tuple is a tuple of the relation."""

    relation: str
    vars: tuple[str, ...]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Not:
    child: "Expr"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class And:
    children: tuple["Expr", ...]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Or:
    children: tuple["Expr", ...]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class If:
    cond: "Expr"
    then: "Expr"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Iff:
    left: "Expr"
    right: "Expr"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Count:
    """exactly / atMost / atLeast over a list of sub-expressions."""

    op: str  # "exactly" | "atMost" | "atLeast"
    k: int
    children: tuple["Expr", ...]
    span: Span = field(default=NO_SPAN, compare=False)


Expr = Atom | RelAtom | Not | And | Or | If | Iff | Count

COUNT_OPS = ("exactly", "atMost", "atLeast")


@dataclass
class ConstraintDecl:
    """A constraint template quantified implicitly over its scope.

    The scope names either a concept (grounded once per instance, the
    concept name doubling as the bound variable) or a relation (grounded
    once per tuple, role names as variables).
    """

    name: str
    scope: str
    body: Expr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class ConceptGraph:
    name: str
    concepts: list[ConceptDecl]
    relations: list[RelationDecl]
    constraints: list[ConstraintDecl]

    def concept(self, name: str) -> ConceptDecl | None:
        for c in self.concepts:
            if c.name == name:
                return c
        return None

    def relation(self, name: str) -> RelationDecl | None:
        for r in self.relations:
            if r.name == name:
                return r
        return None

    def entity_concepts(self) -> list[ConceptDecl]:
        return [c for c in self.concepts if c.kind == ENTITY]

    def label_sets(self) -> list[ConceptDecl]:
        return [c for c in self.concepts if c.kind == LABEL_SET]

    def label_sets_of(self, concept: str) -> list[ConceptDecl]:
        return [c for c in self.label_sets() if c.parent == concept]

    def resolve_label(self, concept: str, label: str) -> list[ConceptDecl]:
        """All label-sets of `concept` that declare `label`."""
        return [ls for ls in self.label_sets_of(concept) if label in ls.labels]
