"""Grounding: constraint templates applied to concrete instances.

An InstanceSet holds instances (one per concept occurrence in the data) and
relation tuples.  Grounding walks every constraint and instantiates it once
per matching scope element: once per instance for concept scopes, once per
tuple for relation scopes.  The result is a list of propositional formulas
over (instance, label) atoms.

Relation atoms are decided at grounding time: the bound instance tuple is
either in the relation or not, so the atom folds to a boolean constant.
Folding simplifies around constants but never drops a formula, which keeps
the output size exactly "sum of matching scope elements per constraint".
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import GroundingError
from .nodes import (
    CONTAINS,
    And,
    Atom,
    ConceptGraph,
    ConstraintDecl,
    Count,
    Expr,
    If,
    Iff,
    Not,
    Or,
    RelAtom,
)


@dataclass
class Instance:
    id: str
    concept: str
    properties: dict = field(default_factory=dict)
    gold: dict = field(default_factory=dict)


class InstanceSet:
    """Instances plus relation tuples, insertion-ordered."""

    def __init__(self):
        self._instances: dict[str, Instance] = {}
        self._by_concept: dict[str, list[Instance]] = {}
        self._tuples: dict[str, list[tuple[str, ...]]] = {}

    def add_instance(self, id: str, concept: str, properties: dict | None = None) -> Instance:
        if id in self._instances:
            raise GroundingError(f"duplicate instance id {id!r}")
        inst = Instance(id, concept, dict(properties or {}))
        self._instances[id] = inst
        self._by_concept.setdefault(concept, []).append(inst)
        return inst

    def add_tuple(self, relation: str, ids: tuple[str, ...]) -> None:
        for i in ids:
            if i not in self._instances:
                raise GroundingError(
                    f"tuple for {relation!r} references missing instance {i!r}"
                )
        self._tuples.setdefault(relation, []).append(tuple(ids))

    def get(self, id: str) -> Instance:
        return self._instances[id]

    def __contains__(self, id: str) -> bool:
        return id in self._instances

    def __len__(self) -> int:
        return len(self._instances)

    @property
    def instances(self) -> list[Instance]:
        return list(self._instances.values())

    def instances_of(self, concept: str) -> list[Instance]:
        return list(self._by_concept.get(concept, ()))

    def tuples_of(self, relation: str) -> list[tuple[str, ...]]:
        return list(self._tuples.get(relation, ()))

    @property
    def relations(self) -> list[str]:
        return list(self._tuples.keys())


# --- ground expressions -----------------------------------------------------


@dataclass(frozen=True)
class GAtom:
    instance: str
    label_set: str
    label: str


@dataclass(frozen=True)
class GConst:
    value: bool


@dataclass(frozen=True)
class GNot:
    child: "GExpr"


@dataclass(frozen=True)
class GAnd:
    children: tuple["GExpr", ...]


@dataclass(frozen=True)
class GOr:
    children: tuple["GExpr", ...]


@dataclass(frozen=True)
class GIf:
    cond: "GExpr"
    then: "GExpr"


@dataclass(frozen=True)
class GIff:
    left: "GExpr"
    right: "GExpr"


@dataclass(frozen=True)
class GCount:
    op: str
    k: int
    children: tuple["GExpr", ...]


GExpr = GAtom | GConst | GNot | GAnd | GOr | GIf | GIff | GCount

TRUE = GConst(True)
FALSE = GConst(False)


def fold(expr: GExpr) -> GExpr:
    """Simplify around boolean constants.  Result contains no GConst unless
    the whole expression folded to one."""
    if isinstance(expr, (GAtom, GConst)):
        return expr
    if isinstance(expr, GNot):
        child = fold(expr.child)
        if isinstance(child, GConst):
            return GConst(not child.value)
        return GNot(child)
    if isinstance(expr, GAnd):
        kept = []
        for c in expr.children:
            c = fold(c)
            if isinstance(c, GConst):
                if not c.value:
                    return FALSE
                continue
            kept.append(c)
        if not kept:
            return TRUE
        if len(kept) == 1:
            return kept[0]
        return GAnd(tuple(kept))
    if isinstance(expr, GOr):
        kept = []
        for c in expr.children:
            c = fold(c)
            if isinstance(c, GConst):
                if c.value:
                    return TRUE
                continue
            kept.append(c)
        if not kept:
            return FALSE
        if len(kept) == 1:
            return kept[0]
        return GOr(tuple(kept))
    if isinstance(expr, GIf):
        cond, then = fold(expr.cond), fold(expr.then)
        if isinstance(cond, GConst):
            return then if cond.value else TRUE
        if isinstance(then, GConst):
            return TRUE if then.value else fold(GNot(cond))
        return GIf(cond, then)
    if isinstance(expr, GIff):
        left, right = fold(expr.left), fold(expr.right)
        if isinstance(left, GConst):
            return right if left.value else fold(GNot(right))
        if isinstance(right, GConst):
            return left if right.value else fold(GNot(left))
        return GIff(left, right)
    if isinstance(expr, GCount):
        k = expr.k
        kept = []
        for c in expr.children:
            c = fold(c)
            if isinstance(c, GConst):
                if c.value:
                    k -= 1
                continue
            kept.append(c)
        n = len(kept)
        if expr.op == "exactly":
            if k < 0 or k > n:
                return FALSE
            if n == 0:
                return TRUE  # k == 0 here
        elif expr.op == "atMost":
            if k < 0:
                return FALSE
            if k >= n:
                return TRUE
        else:  # atLeast
            if k <= 0:
                return TRUE
            if k > n:
                return FALSE
        return GCount(expr.op, k, tuple(kept))
    raise TypeError(f"not a ground expression: {expr!r}")


@dataclass
class GroundFormula:
    constraint: str  # constraint name
    scope_key: tuple[str, ...]  # instance ids the template was applied to
    expr: GExpr


@dataclass(frozen=True)
class Group:
    """One decision group: an instance paired with one of its label-sets."""

    instance: str
    label_set: str
    labels: tuple[str, ...]


@dataclass
class GroundedConstraintSet:
    formulas: list[GroundFormula]
    groups: list[Group]

    def atoms(self) -> list[GAtom]:
        out, seen = [], set()
        for g in self.groups:
            for lbl in g.labels:
                a = GAtom(g.instance, g.label_set, lbl)
                if a not in seen:
                    seen.add(a)
                    out.append(a)
        return out


# --- grounding ---------------------------------------------------------------


def _ground_expr(expr: Expr, env: dict[str, str], instances: InstanceSet) -> GExpr:
    if isinstance(expr, Atom):
        return GAtom(env[expr.var], expr.label_set, expr.label)
    if isinstance(expr, RelAtom):
        tup = tuple(env[v] for v in expr.vars)
        return GConst(tup in set(instances.tuples_of(expr.relation)))
    if isinstance(expr, Not):
        return GNot(_ground_expr(expr.child, env, instances))
    if isinstance(expr, And):
        return GAnd(tuple(_ground_expr(c, env, instances) for c in expr.children))
    if isinstance(expr, Or):
        return GOr(tuple(_ground_expr(c, env, instances) for c in expr.children))
    if isinstance(expr, If):
        return GIf(
            _ground_expr(expr.cond, env, instances),
            _ground_expr(expr.then, env, instances),
        )
    if isinstance(expr, Iff):
        return GIff(
            _ground_expr(expr.left, env, instances),
            _ground_expr(expr.right, env, instances),
        )
    if isinstance(expr, Count):
        return GCount(
            expr.op,
            expr.k,
            tuple(_ground_expr(c, env, instances) for c in expr.children),
        )
    raise TypeError(f"not an expression node: {expr!r}")


def _scope_elements(
    graph: ConceptGraph, con: ConstraintDecl, instances: InstanceSet
) -> list[dict[str, str]]:
    concept = graph.concept(con.scope)
    if concept is not None:
        return [{concept.name: inst.id} for inst in instances.instances_of(concept.name)]
    rel = graph.relation(con.scope)
    if rel is None:
        raise GroundingError(
            f"constraint {con.name!r} scopes over undeclared {con.scope!r}"
        )
    slots = (rel.parent, *rel.children) if rel.kind == CONTAINS else rel.children
    envs = []
    for tup in instances.tuples_of(rel.name):
        if len(tup) != len(slots):
            raise GroundingError(
                f"tuple {tup!r} for {rel.name!r} has arity {len(tup)},"
                f" expected {len(slots)}"
            )
        envs.append(dict(zip(rel.roles, tup)))
    return envs


def _check_tuples(graph: ConceptGraph, instances: InstanceSet) -> None:
    for inst in instances.instances:
        if graph.concept(inst.concept) is None:
            raise GroundingError(
                f"instance {inst.id!r} references undeclared concept"
                f" {inst.concept!r}"
            )
    for rel_name in instances.relations:
        rel = graph.relation(rel_name)
        if rel is None:
            raise GroundingError(f"tuples given for undeclared relation {rel_name!r}")
        slots = (rel.parent, *rel.children) if rel.kind == CONTAINS else rel.children
        for tup in instances.tuples_of(rel_name):
            if len(tup) != len(slots):
                raise GroundingError(
                    f"tuple {tup!r} for {rel_name!r} has arity {len(tup)},"
                    f" expected {len(slots)}"
                )
            for inst_id, concept in zip(tup, slots):
                if inst_id not in instances:
                    raise GroundingError(
                        f"tuple for {rel_name!r} references missing instance"
                        f" {inst_id!r}"
                    )
                if instances.get(inst_id).concept != concept:
                    raise GroundingError(
                        f"tuple slot for {rel_name!r} expects concept"
                        f" {concept!r}, got {instances.get(inst_id).concept!r}"
                        f" ({inst_id!r})"
                    )


def ground(graph: ConceptGraph, instances: InstanceSet) -> GroundedConstraintSet:
    """Instantiate every constraint over its scope.

    Also computes the decision groups: one (instance, label-set) pair per
    instance of each label-set's parent concept, which later drive the
    structural exactly-one rows and the objective.
    """
    _check_tuples(graph, instances)

    groups: list[Group] = []
    for inst in instances.instances:
        for ls in graph.label_sets_of(inst.concept):
            groups.append(Group(inst.id, ls.name, ls.labels))

    formulas: list[GroundFormula] = []
    for con in graph.constraints:
        for env in _scope_elements(graph, con, instances):
            gexpr = fold(_ground_expr(con.body, env, instances))
            formulas.append(
                GroundFormula(con.name, tuple(env.values()), gexpr)
            )
    return GroundedConstraintSet(formulas, groups)
