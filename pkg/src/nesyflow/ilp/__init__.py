"""Constraint compilation and exact ILP inference."""

from __future__ import annotations

from ..errors import CompileError
from ..graphlang import ConceptGraph, InstanceSet, ground, validate
from .compile import EQ, GE, LE, IlpProgram, Row, compile
from .scores import EPS, ScoreTable
from .solve import (
    DEFAULT_NODE_BUDGET,
    INFEASIBLE,
    OPTIMAL,
    Assignment,
    solve,
)


def infer(
    graph: ConceptGraph,
    instances: InstanceSet,
    scores: ScoreTable,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> Assignment:
    """ground + compile + solve, with a validation gate up front."""
    problems = [d for d in validate(graph) if d.severity == "error"]
    if problems:
        raise CompileError(
            "graph does not validate: "
            + "; ".join(d.message for d in problems)
        )
    return solve(compile(ground(graph, instances), scores), node_budget)


__all__ = [
    "Assignment",
    "CompileError",
    "DEFAULT_NODE_BUDGET",
    "EPS",
    "EQ",
    "GE",
    "INFEASIBLE",
    "IlpProgram",
    "LE",
    "OPTIMAL",
    "Row",
    "ScoreTable",
    "compile",
    "infer",
    "solve",
]
