"""Exact 0/1 solver: depth-first branch and bound over label groups.

The program splits into connected components (variables linked by sharing a
row); each component is an independent subproblem, so it is searched on its
own and the choices are composed afterwards.  Without the split, the bound
overestimates every still-open component at once and pruning collapses on
instance sets with many unrelated constraints.

Within a component, branching picks the unfixed group with the fewest
surviving labels and tries labels by descending log-probability (then
declaration order).  After every assignment a bounds-consistency pass runs
over the touched rows, fixing any variable whose alternative would make a row
unsatisfiable; on exactly-one and at-most-one rows this degenerates to
classic unit propagation.

The admissible bound is the log-probability already committed plus, for each
open group, the best label still alive.  Pruning keeps a small epsilon of
slack so that assignments tying the incumbent are never cut: ties must reach
the leaf comparator, which prefers the lexicographically smallest vector of
label indices over the canonical group order (groups sorted by instance id
then label-set name).  Leaf and final objectives are recomputed with
math.fsum in that fixed order, making scores order-independent and
bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import BudgetExceededError
from .compile import EQ, GE, LE, IlpProgram

DEFAULT_NODE_BUDGET = 10_000_000
PRUNE_SLACK = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"


@dataclass
class Assignment:
    status: str
    choices: dict[str, dict[str, str]]  # instance -> {label_set: label}
    objective: float | None

    def label_of(self, instance: str, label_set: str) -> str | None:
        return self.choices.get(instance, {}).get(label_set)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "choices": self.choices,
        }


class _Conflict(Exception):
    pass


class _Search:
    def __init__(self, program: IlpProgram, node_budget: int):
        self.p = program
        self.budget = node_budget
        self.nodes = 0
        nv = program.num_vars
        self.val: list[int | None] = [None] * nv
        self.trail: list[int] = []
        # row-major copies for speed
        self.row_terms = [r.terms for r in program.rows]
        self.row_sense = [r.sense for r in program.rows]
        self.row_rhs = [r.rhs for r in program.rows]
        self.occ: list[list[int]] = [[] for _ in range(nv)]
        for ri, r in enumerate(program.rows):
            for v, _ in r.terms:
                self.occ[v].append(ri)
        # current component, set by run_component()
        self.groups_idx: list[int] = []
        self.aux_vars: list[int] = []
        self.best_obj: float | None = None
        self.best_vec: tuple[int, ...] | None = None

    # --- propagation ------------------------------------------------------

    def assign(self, var: int, value: int, queue: list[int]) -> None:
        cur = self.val[var]
        if cur is not None:
            if cur != value:
                raise _Conflict()
            return
        self.val[var] = value
        self.trail.append(var)
        queue.extend(self.occ[var])

    def propagate(self, queue: list[int]) -> None:
        while queue:
            ri = queue.pop()
            terms = self.row_terms[ri]
            sense = self.row_sense[ri]
            rhs = self.row_rhs[ri]
            lo = hi = 0
            free: list[tuple[int, int]] = []
            for v, c in terms:
                x = self.val[v]
                if x is None:
                    free.append((v, c))
                    if c > 0:
                        hi += c
                    else:
                        lo += c
                elif x:
                    lo += c
                    hi += c
            if sense == LE:
                if lo > rhs:
                    raise _Conflict()
                if hi <= rhs:
                    continue
                for v, c in free:
                    if c > 0 and lo + c > rhs:
                        self.assign(v, 0, queue)
                    elif c < 0 and lo - c > rhs:
                        self.assign(v, 1, queue)
            elif sense == GE:
                if hi < rhs:
                    raise _Conflict()
                if lo >= rhs:
                    continue
                for v, c in free:
                    if c > 0 and hi - c < rhs:
                        self.assign(v, 1, queue)
                    elif c < 0 and hi + c < rhs:
                        self.assign(v, 0, queue)
            else:  # EQ
                if lo > rhs or hi < rhs:
                    raise _Conflict()
                for v, c in free:
                    if c > 0:
                        if lo + c > rhs:
                            self.assign(v, 0, queue)
                        elif hi - c < rhs:
                            self.assign(v, 1, queue)
                    else:
                        if lo - c > rhs:
                            self.assign(v, 1, queue)
                        elif hi + c < rhs:
                            self.assign(v, 0, queue)

    def undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            self.val[self.trail.pop()] = None

    # --- group helpers ------------------------------------------------------

    def group_chosen(self, gi: int) -> int | None:
        for idx, v in enumerate(self.p.group_vars[gi]):
            if self.val[v] == 1:
                return idx
        return None

    def group_alive(self, gi: int) -> list[int]:
        return [
            idx
            for idx, v in enumerate(self.p.group_vars[gi])
            if self.val[v] is None
        ]

    def bound(self) -> float:
        total = 0.0
        for gi in self.groups_idx:
            vars_ = self.p.group_vars[gi]
            chosen = self.group_chosen(gi)
            if chosen is not None:
                total += self.p.objective[vars_[chosen]]
                continue
            alive = self.group_alive(gi)
            if not alive:
                return -math.inf  # no label left: dead branch
            total += max(self.p.objective[vars_[i]] for i in alive)
        return total

    # --- leaves ---------------------------------------------------------------

    def at_leaf(self) -> None:
        vec = []
        parts = []
        for gi in self.groups_idx:
            vars_ = self.p.group_vars[gi]
            chosen = self.group_chosen(gi)
            if chosen is None:
                raise _Conflict()  # group killed entirely
            vec.append(chosen)
            parts.append(self.p.objective[vars_[chosen]])
        obj = math.fsum(parts)
        vec = tuple(vec)
        if (
            self.best_obj is None
            or obj > self.best_obj
            or (obj == self.best_obj and vec < self.best_vec)
        ):
            self.best_obj = obj
            self.best_vec = vec

    def unfixed_aux(self) -> int | None:
        for v in self.aux_vars:
            if self.val[v] is None:
                return v
        return None

    # --- search -----------------------------------------------------------------

    def search(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceededError(
                f"node budget {self.budget} exhausted before optimality"
            )
        if self.best_obj is not None and self.bound() < self.best_obj - PRUNE_SLACK:
            return

        # pick the open group with the fewest live labels
        pick, alive = None, None
        for gi in self.groups_idx:
            if self.group_chosen(gi) is not None:
                continue
            a = self.group_alive(gi)
            if not a:
                return  # propagation killed this group on every label
            if alive is None or len(a) < len(alive):
                pick, alive = gi, a
        if pick is None:
            aux = self.unfixed_aux()
            if aux is None:
                self.at_leaf()
                return
            for value in (1, 0):
                mark = len(self.trail)
                queue: list[int] = []
                try:
                    self.assign(aux, value, queue)
                    self.propagate(queue)
                    self.search()
                except _Conflict:
                    pass
                self.undo_to(mark)
            return

        vars_ = self.p.group_vars[pick]
        order = sorted(alive, key=lambda i: (-self.p.objective[vars_[i]], i))
        for idx in order:
            mark = len(self.trail)
            queue: list[int] = []
            try:
                self.assign(vars_[idx], 1, queue)
                self.propagate(queue)
                self.search()
            except _Conflict:
                pass
            self.undo_to(mark)

    def run_component(
        self, groups_idx: list[int], aux_vars: list[int]
    ) -> tuple[int, ...] | None:
        """Search one component from the root-propagated state; returns the
        best index vector over groups_idx, or None if unsatisfiable."""
        self.groups_idx = groups_idx
        self.aux_vars = aux_vars
        self.best_obj = None
        self.best_vec = None
        mark = len(self.trail)
        self.search()
        self.undo_to(mark)
        return self.best_vec


def _components(program: IlpProgram) -> list[tuple[list[int], list[int]]]:
    """Partition variables into row-connected components.

    Returns (group indices, auxiliary vars) per component, ordered by first
    group so the node budget is consumed deterministically.
    """
    parent = list(range(program.num_vars))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for row in program.rows:
        if not row.terms:
            continue
        r0 = find(row.terms[0][0])
        for v, _ in row.terms[1:]:
            parent[find(v)] = r0

    groups_of: dict[int, list[int]] = {}
    for gi, vars_ in enumerate(program.group_vars):
        groups_of.setdefault(find(vars_[0]), []).append(gi)
    aux_of: dict[int, list[int]] = {}
    for v in range(program.num_vars):
        if program.var_atom[v] is None:
            aux_of.setdefault(find(v), []).append(v)

    comps = [
        (gis, aux_of.pop(root, []))
        for root, gis in sorted(groups_of.items(), key=lambda kv: kv[1][0])
    ]
    # aux not reaching any group (degenerate but satisfiable rows)
    comps.extend(([], aux) for _, aux in sorted(aux_of.items()))
    return comps


def solve(program: IlpProgram, node_budget: int = DEFAULT_NODE_BUDGET) -> Assignment:
    s = _Search(program, node_budget)
    vecs: dict[int, tuple[int, ...]] = {}
    feasible = True
    try:
        s.propagate(list(range(len(program.rows))))
        for groups_idx, aux_vars in _components(program):
            vec = s.run_component(groups_idx, aux_vars)
            if vec is None:
                feasible = False
                break
            for gi, idx in zip(groups_idx, vec):
                vecs[gi] = idx
    except _Conflict:
        feasible = False
    if not feasible:
        return Assignment(INFEASIBLE, {}, None)
    choices: dict[str, dict[str, str]] = {}
    parts = []
    for gi, group in enumerate(program.groups):
        idx = vecs[gi]
        choices.setdefault(group.instance, {})[group.label_set] = group.labels[idx]
        parts.append(program.objective[program.group_vars[gi][idx]])
    return Assignment(OPTIMAL, choices, math.fsum(parts))
