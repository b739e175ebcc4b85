"""Conceptual-graph language: parse, validate, print, ground."""

from .ground import (
    GAnd,
    GAtom,
    GConst,
    GCount,
    GExpr,
    GIf,
    GIff,
    GNot,
    GOr,
    Group,
    GroundFormula,
    GroundedConstraintSet,
    Instance,
    InstanceSet,
    fold,
    ground,
)
from .nodes import (
    CONTAINS,
    ENTITY,
    HAS_A,
    LABEL_SET,
    And,
    Atom,
    ConceptDecl,
    ConceptGraph,
    ConstraintDecl,
    Count,
    Diagnostic,
    Expr,
    If,
    Iff,
    Not,
    Or,
    RelAtom,
    RelationDecl,
    Span,
)
from .parser import ParseResult, parse, parse_file
from .printer import print_expr, print_graph
from .validate import validate

__all__ = [
    "And",
    "Atom",
    "CONTAINS",
    "ConceptDecl",
    "ConceptGraph",
    "ConstraintDecl",
    "Count",
    "Diagnostic",
    "ENTITY",
    "Expr",
    "GAnd",
    "GAtom",
    "GConst",
    "GCount",
    "GExpr",
    "GIf",
    "GIff",
    "GNot",
    "GOr",
    "Group",
    "GroundFormula",
    "GroundedConstraintSet",
    "HAS_A",
    "If",
    "Iff",
    "Instance",
    "InstanceSet",
    "LABEL_SET",
    "Not",
    "Or",
    "ParseResult",
    "RelAtom",
    "RelationDecl",
    "Span",
    "fold",
    "ground",
    "parse",
    "parse_file",
    "print_expr",
    "print_graph",
    "validate",
]
