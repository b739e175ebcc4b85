"""Canonical pretty-printer for ConceptGraph values.

print_graph is the inverse of parse up to formatting: parsing its output
reproduces the same ConceptGraph value (spans aside), and printing is a
fixed point, so graphs can be diffed and stored canonically.
"""

from __future__ import annotations

from .nodes import (
    CONTAINS,
    And,
    Atom,
    ConceptGraph,
    Count,
    Expr,
    If,
    Iff,
    Not,
    Or,
    RelAtom,
)


def print_expr(expr: Expr) -> str:
    if isinstance(expr, Atom):
        return f"{expr.var} is {expr.label}"
    if isinstance(expr, RelAtom):
        return f"{expr.relation}({', '.join(expr.vars)})"
    if isinstance(expr, Not):
        return f"not({print_expr(expr.child)})"
    if isinstance(expr, And):
        return f"and({', '.join(print_expr(c) for c in expr.children)})"
    if isinstance(expr, Or):
        return f"or({', '.join(print_expr(c) for c in expr.children)})"
    if isinstance(expr, If):
        return f"if {print_expr(expr.cond)} then {print_expr(expr.then)}"
    if isinstance(expr, Iff):
        return f"iff({print_expr(expr.left)}, {print_expr(expr.right)})"
    if isinstance(expr, Count):
        parts = ", ".join(print_expr(c) for c in expr.children)
        return f"{expr.op}({expr.k}, {parts})"
    raise TypeError(f"not an expression node: {expr!r}")


def print_graph(graph: ConceptGraph) -> str:
    lines = [f"graph {graph.name}", ""]
    for c in graph.concepts:
        if c.kind == "entity":
            lines.append(f"concept {c.name}")
        else:
            lines.append(
                f"labels {c.name} of {c.parent} {{ {', '.join(c.labels)} }}"
            )
    if graph.relations:
        lines.append("")
    for r in graph.relations:
        if r.kind == CONTAINS:
            lines.append(f"contains {r.name} ({r.parent} -> {r.children[0]})")
        else:
            slots = ", ".join(
                f"{role}: {concept}" for role, concept in zip(r.roles, r.children)
            )
            lines.append(f"has_a {r.name} ({slots})")
    for con in graph.constraints:
        lines.append("")
        lines.append(f"constraint {con.name} on {con.scope} {{")
        lines.append(f"  {print_expr(con.body)}")
        lines.append("}")
    return "\n".join(lines) + "\n"
