"""Independent oracles the solver is tested against.

Everything here deliberately avoids the compile/solve path: constraints are
evaluated by walking the source AST per scope element, and optima come from
exhaustive enumeration or domain-specific backtrackers.  The only contracts
shared with the engine are the scoring convention (ln of the floored
probability) and the tie rule (maximize the canonically ordered fsum of
log-probabilities; on ties prefer the lexicographically smallest vector of
label indices over groups sorted by (instance id, label-set name)).
"""

from __future__ import annotations

import itertools
import math

from nesyflow.graphlang import (
    And,
    Atom,
    ConceptGraph,
    Count,
    If,
    Iff,
    InstanceSet,
    Not,
    Or,
    RelAtom,
)

EPS = 1e-9


def logp(p: float) -> float:
    return math.log(max(p, EPS))


# --- AST-level constraint evaluation ---------------------------------------


def eval_expr(expr, env, choices, instances) -> bool:
    """env: variable -> instance id; choices: (instance, label_set) -> label."""
    if isinstance(expr, Atom):
        return choices[(env[expr.var], expr.label_set)] == expr.label
    if isinstance(expr, RelAtom):
        tup = tuple(env[v] for v in expr.vars)
        return tup in instances.tuples_of(expr.relation)
    if isinstance(expr, Not):
        return not eval_expr(expr.child, env, choices, instances)
    if isinstance(expr, And):
        return all(eval_expr(c, env, choices, instances) for c in expr.children)
    if isinstance(expr, Or):
        return any(eval_expr(c, env, choices, instances) for c in expr.children)
    if isinstance(expr, If):
        return not eval_expr(expr.cond, env, choices, instances) or eval_expr(
            expr.then, env, choices, instances
        )
    if isinstance(expr, Iff):
        return eval_expr(expr.left, env, choices, instances) == eval_expr(
            expr.right, env, choices, instances
        )
    if isinstance(expr, Count):
        hits = sum(
            1 for c in expr.children if eval_expr(c, env, choices, instances)
        )
        if expr.op == "exactly":
            return hits == expr.k
        if expr.op == "atMost":
            return hits <= expr.k
        return hits >= expr.k
    raise TypeError(f"not an expression node: {expr!r}")


def scope_envs(graph: ConceptGraph, con, instances: InstanceSet):
    concept = graph.concept(con.scope)
    if concept is not None:
        return [{concept.name: i.id} for i in instances.instances_of(concept.name)]
    rel = graph.relation(con.scope)
    return [dict(zip(rel.roles, tup)) for tup in instances.tuples_of(rel.name)]


def satisfies(graph: ConceptGraph, instances: InstanceSet, choices: dict) -> bool:
    for con in graph.constraints:
        for env in scope_envs(graph, con, instances):
            if not eval_expr(con.body, env, choices, instances):
                return False
    return True


# --- exhaustive enumeration --------------------------------------------------


def canonical_groups(graph: ConceptGraph, instances: InstanceSet):
    groups = []
    for inst in instances.instances:
        for ls in graph.label_sets_of(inst.concept):
            groups.append((inst.id, ls.name, ls.labels))
    groups.sort(key=lambda g: (g[0], g[1]))
    return groups


def objective_of(groups, choices, scores) -> float:
    return math.fsum(
        logp(scores[inst][choices[(inst, ls)]]) for inst, ls, _ in groups
    )


def enumerate_optimum(graph: ConceptGraph, instances: InstanceSet, scores: dict):
    """Brute-force optimum over all complete label assignments.

    Returns (status, objective, choices) with status "optimal" or
    "infeasible"; choices is {(instance, label_set): label}.
    """
    groups = canonical_groups(graph, instances)
    best = None  # (objective, tie_vector, choices)
    for combo in itertools.product(*[range(len(g[2])) for g in groups]):
        choices = {
            (inst, ls): labels[i]
            for (inst, ls, labels), i in zip(groups, combo)
        }
        if not satisfies(graph, instances, choices):
            continue
        obj = objective_of(groups, choices, scores)
        vec = tuple(combo)
        if best is None or obj > best[0] or (obj == best[0] and vec < best[1]):
            best = (obj, vec, choices)
    if best is None:
        return "infeasible", None, None
    return "optimal", best[0], best[2]


# --- domain backtrackers -------------------------------------------------------


def sudoku_valid_grids():
    """All completed 4x4 grids satisfying row/col/box uniqueness."""
    from taskgraphs import sudoku_groups, sudoku_cell

    groups = sudoku_groups()
    cells = [sudoku_cell(r, c) for r in range(4) for c in range(4)]
    cell_groups = {cell: [g for g in groups if cell in g] for cell in cells}
    assign: dict[str, int] = {}

    def consistent(cell, d):
        for g in cell_groups[cell]:
            for other in g:
                if other != cell and assign.get(other) == d:
                    return False
        return True

    def walk(i):
        if i == len(cells):
            yield dict(assign)
            return
        cell = cells[i]
        for d in range(1, 5):
            if consistent(cell, d):
                assign[cell] = d
                yield from walk(i + 1)
                del assign[cell]

    yield from walk(0)


def sudoku_oracle(scores: dict):
    """Best valid grid under the scoring convention, tie rule applied over
    the canonical (cell id, 'digit') group order."""
    best = None
    for grid in sudoku_valid_grids():
        cells = sorted(grid)
        obj = math.fsum(logp(scores[c][f"d{grid[c]}"]) for c in cells)
        vec = tuple(grid[c] - 1 for c in cells)
        if best is None or obj > best[0] or (obj == best[0] and vec < best[1]):
            best = (obj, vec, grid)
    return best[0], best[2]


def queens_solutions():
    """All 92 non-attacking placements, as col-per-row lists (1-based)."""
    out = []
    cols: list[int] = []

    def safe(col):
        r = len(cols)
        for r0, c0 in enumerate(cols):
            if c0 == col or abs(col - c0) == r - r0:
                return False
        return True

    def walk():
        if len(cols) == 8:
            out.append(list(cols))
            return
        for col in range(1, 9):
            if safe(col):
                cols.append(col)
                walk()
                cols.pop()

    walk()
    return out


def queens_oracle(scores: dict):
    best = None
    for sol in queens_solutions():
        obj = math.fsum(logp(scores[f"row{r}"][f"c{sol[r - 1]}"]) for r in range(1, 9))
        vec = tuple(c - 1 for c in sol)  # rows already sorted row1..row8
        if best is None or obj > best[0] or (obj == best[0] and vec < best[1]):
            best = (obj, vec, sol)
    return best[0], best[2]


def mnist_pair_oracle(left_scores: dict, right_scores: dict, total: int):
    """Brute force over the 10x10 digit grid for one pair."""
    best = None
    for a in range(10):
        for b in range(10):
            if a + b != total:
                continue
            obj = math.fsum((logp(left_scores[f"d{a}"]), logp(right_scores[f"d{b}"])))
            vec = (a, b)
            if best is None or obj > best[0] or (obj == best[0] and vec < best[1]):
                best = (obj, vec, (a, b))
    if best is None:
        return None
    return best[0], best[2]


def hierarchy_oracle(scores: dict, parent_of: dict):
    """Brute force over (coarse, fine) pairs for a single item."""
    coarse = ["animal", "vehicle"]
    fine = ["cat", "dog", "ship", "truck"]
    best = None
    for ci, c in enumerate(coarse):
        for fi, f in enumerate(fine):
            if parent_of[f] != c:
                continue
            obj = math.fsum((logp(scores[c]), logp(scores[f])))
            vec = (ci, fi)
            if best is None or obj > best[0] or (obj == best[0] and vec < best[1]):
                best = (obj, vec, (c, f))
    return best[0], best[2]
