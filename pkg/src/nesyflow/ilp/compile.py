"""Grounded constraints + scores -> 0/1 integer linear program.

Variable layout: one binary per (instance, label) atom, created group by
group in canonical order (groups sorted by instance id then label-set name,
labels in declaration order), then auxiliaries as encoding demands them.

Encodings, with x for child literals and y/z for auxiliaries:
    not x                  ->  the literal 1 - x (no auxiliary)
    and: y <-> AND x_i     ->  y <= x_i for all i;  y >= sum x_i - (n-1)
    or:  y <-> OR x_i      ->  y >= x_i for all i;  y <= sum x_i
    if a then b            ->  rewritten to or(not a, b)
    iff(a, b)              ->  rewritten to and(or(not a, b), or(not b, a))
    count at the root      ->  a single direct row  sum x_i {==,<=,>=} k
    count nested           ->  indicator z with big-M rows tying z to the
                               truth of the comparison in both directions
                               (exactly first splits into atLeast + atMost)

Root handling follows the shape of the formula: and-roots recurse into each
child as its own root, count-roots become direct rows, a bare (possibly
negated) atom is pinned by an equality row, and anything else gets its
Tseitin variable fixed to 1.  Rows are deduplicated by normalized key, so a
constraint restating a structural exactly-one row adds nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import CompileError
from ..graphlang import (
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
    GroundedConstraintSet,
)
from .scores import ScoreTable

EQ, LE, GE = "==", "<=", ">="

# literal: (variable index, negated?)
Literal = tuple[int, bool]


@dataclass(frozen=True)
class Row:
    terms: tuple[tuple[int, int], ...]  # (var, coefficient), var-sorted
    sense: str
    rhs: int


@dataclass
class IlpProgram:
    objective: list[float]  # per variable; 0.0 on auxiliaries
    rows: list[Row]
    groups: list[Group]
    group_vars: list[tuple[int, ...]]  # variable ids per group, label order
    var_atom: list[GAtom | None]  # source atom per column; None for auxiliaries
    atom_var: dict[tuple[str, str], int]

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_aux(self) -> int:
        return sum(1 for a in self.var_atom if a is None)


class _LinExpr:
    """Small integer linear-expression accumulator."""

    def __init__(self):
        self.coefs: dict[int, int] = {}
        self.const = 0

    def add_var(self, var: int, coef: int = 1) -> "_LinExpr":
        self.coefs[var] = self.coefs.get(var, 0) + coef
        return self

    def add_lit(self, lit: Literal, coef: int = 1) -> "_LinExpr":
        var, neg = lit
        if neg:
            self.const += coef
            return self.add_var(var, -coef)
        return self.add_var(var, coef)

    def row(self, sense: str, rhs: int) -> Row:
        terms = tuple(
            sorted((v, c) for v, c in self.coefs.items() if c != 0)
        )
        return Row(terms, sense, rhs - self.const)


class _Builder:
    def __init__(self, ground: GroundedConstraintSet, scores: ScoreTable):
        self.objective: list[float] = []
        self.var_atom: list[GAtom | None] = []
        self.atom_var: dict[tuple[str, str], int] = {}
        self.rows: list[Row] = []
        self._row_keys: set[Row] = set()
        self.groups = list(ground.groups)
        self.group_vars: list[tuple[int, ...]] = []
        self.scores = scores

    def new_var(self, atom: GAtom | None, coef: float) -> int:
        var = len(self.objective)
        self.objective.append(coef)
        self.var_atom.append(atom)
        return var

    def emit(self, expr: _LinExpr, sense: str, rhs: int) -> None:
        row = expr.row(sense, rhs)
        if row in self._row_keys:
            return
        self._row_keys.add(row)
        self.rows.append(row)

    # --- variables ---------------------------------------------------------

    def build_atom_vars(self) -> None:
        order = sorted(range(len(self.groups)), key=lambda i: (self.groups[i].instance, self.groups[i].label_set))
        self.groups = [self.groups[i] for i in order]
        for g in self.groups:
            vars_ = []
            for lbl in g.labels:
                key = (g.instance, lbl)
                if key in self.atom_var:
                    raise CompileError(
                        f"label {lbl!r} is claimed twice for instance"
                        f" {g.instance!r}"
                    )
                var = self.new_var(
                    GAtom(g.instance, g.label_set, lbl),
                    self.scores.logp(g.instance, lbl),
                )
                self.atom_var[key] = var
                vars_.append(var)
            self.group_vars.append(tuple(vars_))

    def structural_rows(self) -> None:
        for vars_ in self.group_vars:
            expr = _LinExpr()
            for v in vars_:
                expr.add_var(v)
            self.emit(expr, EQ, 1)

    # --- expression encoding -------------------------------------------------

    def atom_lit(self, atom: GAtom) -> Literal:
        try:
            return (self.atom_var[(atom.instance, atom.label)], False)
        except KeyError:
            raise CompileError(
                f"formula references unscored atom ({atom.instance!r},"
                f" {atom.label!r})",
                code="missing-score",
            ) from None

    def encode(self, expr: GExpr) -> Literal:
        if isinstance(expr, GAtom):
            return self.atom_lit(expr)
        if isinstance(expr, GNot):
            var, neg = self.encode(expr.child)
            return (var, not neg)
        if isinstance(expr, GAnd):
            lits = [self.encode(c) for c in expr.children]
            y = self.new_var(None, 0.0)
            for lit in lits:
                # y <= lit
                self.emit(_LinExpr().add_var(y).add_lit(lit, -1), LE, 0)
            total = _LinExpr().add_var(y, -1)
            for lit in lits:
                total.add_lit(lit)
            self.emit(total, LE, len(lits) - 1)  # sum - y <= n-1
            return (y, False)
        if isinstance(expr, GOr):
            lits = [self.encode(c) for c in expr.children]
            y = self.new_var(None, 0.0)
            for lit in lits:
                # y >= lit
                self.emit(_LinExpr().add_var(y).add_lit(lit, -1), GE, 0)
            total = _LinExpr().add_var(y, -1)
            for lit in lits:
                total.add_lit(lit)
            self.emit(total, GE, 0)  # sum - y >= 0, i.e. y <= sum
            return (y, False)
        if isinstance(expr, GIf):
            return self.encode(GOr((GNot(expr.cond), expr.then)))
        if isinstance(expr, GIff):
            return self.encode(
                GAnd(
                    (
                        GOr((GNot(expr.left), expr.right)),
                        GOr((GNot(expr.right), expr.left)),
                    )
                )
            )
        if isinstance(expr, GCount):
            if expr.op == "exactly":
                return self.encode(
                    GAnd(
                        (
                            GCount("atLeast", expr.k, expr.children),
                            GCount("atMost", expr.k, expr.children),
                        )
                    )
                )
            lits = [self.encode(c) for c in expr.children]
            n, k = len(lits), expr.k
            z = self.new_var(None, 0.0)
            total = lambda: self._sum_lits(lits)  # noqa: E731
            if expr.op == "atMost":
                # z=1 -> sum <= k ; z=0 -> sum >= k+1
                self.emit(total().add_var(z, n - k), LE, n)
                self.emit(total().add_var(z, k + 1), GE, k + 1)
            else:  # atLeast
                # z=1 -> sum >= k ; z=0 -> sum <= k-1
                self.emit(total().add_var(z, -k), GE, 0)
                self.emit(total().add_var(z, -(n - k + 1)), LE, k - 1)
            return (z, False)
        if isinstance(expr, GConst):
            raise CompileError("constant below the root survived folding")
        raise TypeError(f"not a ground expression: {expr!r}")

    def _sum_lits(self, lits: list[Literal]) -> _LinExpr:
        expr = _LinExpr()
        for lit in lits:
            expr.add_lit(lit)
        return expr

    # --- formula roots ---------------------------------------------------------

    def emit_root(self, expr: GExpr) -> None:
        if isinstance(expr, GConst):
            if not expr.value:
                self.emit(_LinExpr(), EQ, 1)  # 0 == 1: infeasible marker
            return
        if isinstance(expr, GAnd):
            for child in expr.children:
                self.emit_root(child)
            return
        if isinstance(expr, GCount):
            lits = [self.encode(c) for c in expr.children]
            sense = {"exactly": EQ, "atMost": LE, "atLeast": GE}[expr.op]
            self.emit(self._sum_lits(lits), sense, expr.k)
            return
        if isinstance(expr, (GAtom, GNot)):
            lit = self.encode(expr)
            self.emit(_LinExpr().add_lit(lit), EQ, 1)
            return
        root = self.encode(expr)
        self.emit(_LinExpr().add_lit(root), EQ, 1)


def compile(ground: GroundedConstraintSet, scores: ScoreTable) -> IlpProgram:
    b = _Builder(ground, scores)
    b.build_atom_vars()
    b.structural_rows()
    for formula in ground.formulas:
        b.emit_root(formula.expr)
    return IlpProgram(
        objective=b.objective,
        rows=b.rows,
        groups=b.groups,
        group_vars=b.group_vars,
        var_atom=b.var_atom,
        atom_var=b.atom_var,
    )
