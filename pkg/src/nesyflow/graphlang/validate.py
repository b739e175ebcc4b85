"""Semantic validation beyond what parsing already guarantees.

Findings are data, not failures: errors mean the graph cannot be grounded
(cyclic containment, malformed relations, label-sets hanging off label-sets),
warnings flag smells a reviewer would raise (concepts nothing references,
constraints stated twice).  validate never mutates its input and is
idempotent.
"""

from __future__ import annotations

from .nodes import (
    CONTAINS,
    ENTITY,
    HAS_A,
    LABEL_SET,
    And,
    Atom,
    ConceptGraph,
    Count,
    Diagnostic,
    Expr,
    If,
    Iff,
    Not,
    Or,
    RelAtom,
    error,
    warning,
)
from .printer import print_expr


def _atom_concepts(expr: Expr, acc: set[str]) -> None:
    if isinstance(expr, Atom):
        if expr.concept:
            acc.add(expr.concept)
    elif isinstance(expr, Not):
        _atom_concepts(expr.child, acc)
    elif isinstance(expr, (And, Or, Count)):
        for child in expr.children:
            _atom_concepts(child, acc)
    elif isinstance(expr, If):
        _atom_concepts(expr.cond, acc)
        _atom_concepts(expr.then, acc)
    elif isinstance(expr, Iff):
        _atom_concepts(expr.left, acc)
        _atom_concepts(expr.right, acc)


def _count_bounds(expr: Expr, diags: list[Diagnostic]) -> None:
    if isinstance(expr, Count):
        if expr.k > len(expr.children):
            diags.append(
                error(
                    "count-bound",
                    f"{expr.op} bound {expr.k} exceeds its {len(expr.children)}"
                    " arguments",
                    expr.span,
                )
            )
        for child in expr.children:
            _count_bounds(child, diags)
    elif isinstance(expr, Not):
        _count_bounds(expr.child, diags)
    elif isinstance(expr, (And, Or)):
        for child in expr.children:
            _count_bounds(child, diags)
    elif isinstance(expr, If):
        _count_bounds(expr.cond, diags)
        _count_bounds(expr.then, diags)
    elif isinstance(expr, Iff):
        _count_bounds(expr.left, diags)
        _count_bounds(expr.right, diags)


def validate(graph: ConceptGraph) -> list[Diagnostic]:
    diags: list[Diagnostic] = []

    # structural re-checks; parse enforces these for text input but graphs
    # can also be built programmatically
    for rel in graph.relations:
        if rel.kind == CONTAINS and len(rel.children) != 1:
            diags.append(
                error(
                    "arity-mismatch",
                    f"containment {rel.name!r} must have exactly one child",
                    rel.span,
                )
            )
        if rel.kind == HAS_A and (
            len(rel.children) < 2 or len(rel.roles) != len(rel.children)
        ):
            diags.append(
                error(
                    "arity-mismatch",
                    f"has_a relation {rel.name!r} needs one role per slot and"
                    " at least 2 slots",
                    rel.span,
                )
            )
    for ls in graph.label_sets():
        parent = graph.concept(ls.parent) if ls.parent else None
        if parent is not None and parent.kind == LABEL_SET:
            diags.append(
                error(
                    "label-set-parent",
                    f"label-set {ls.name!r} cannot attach to label-set"
                    f" {ls.parent!r}",
                    ls.span,
                )
            )

    # cyclic containment: follow parent -> child edges
    edges = [
        (r.parent, r.children[0]) for r in graph.relations if r.kind == CONTAINS
    ]
    children_of: dict[str, list[str]] = {}
    for p, c in edges:
        children_of.setdefault(p, []).append(c)
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(node: str, rel_span) -> bool:
        if state.get(node) == 0:
            return True
        if state.get(node) == 1:
            return False
        state[node] = 0
        for nxt in children_of.get(node, ()):
            if visit(nxt, rel_span):
                return True
        state[node] = 1
        return False

    for rel in graph.relations:
        if rel.kind == CONTAINS and not state.get(rel.parent) == 1:
            if visit(rel.parent, rel.span):
                diags.append(
                    error(
                        "cyclic-containment",
                        f"containment cycle through {rel.parent!r}",
                        rel.span,
                    )
                )
                break

    # unused concepts: entities nothing points at.  A label-set counts as a
    # use of its parent (it defines that concept's output space), and a
    # label-set itself counts as used by existing; constraints and relations
    # are the other references.
    used: set[str] = set()
    for rel in graph.relations:
        if rel.kind == CONTAINS:
            used.add(rel.parent)
        used.update(rel.children)
    for ls in graph.label_sets():
        if ls.parent:
            used.add(ls.parent)
    for con in graph.constraints:
        used.add(con.scope)
        _atom_concepts(con.body, used)
    for c in graph.concepts:
        if c.kind == ENTITY and c.name not in used:
            diags.append(
                warning(
                    "unused-concept",
                    f"concept {c.name!r} is never referenced",
                    c.span,
                )
            )

    # duplicate constraints: syntactic identity of scope + printed body
    seen: dict[tuple[str, str], str] = {}
    for con in graph.constraints:
        key = (con.scope, print_expr(con.body))
        if key in seen:
            diags.append(
                warning(
                    "duplicate-constraint",
                    f"constraint {con.name!r} restates {seen[key]!r}",
                    con.span,
                )
            )
        else:
            seen[key] = con.name
        _count_bounds(con.body, diags)

    return diags
