"""Compilation: variable/row counts, encodings, dedup, objective."""

import math

import pytest
import taskgraphs
from nesyflow import graphlang as gl
from nesyflow import ilp
from nesyflow.errors import CompileError


def build(src, instances, scores):
    g = gl.parse(src).graph
    gs = gl.ground(g, instances)
    table = ilp.ScoreTable.from_json(scores, g, instances)
    return ilp.compile(gs, table)


def test_unconstrained_multiclass():
    src = "graph g\nconcept q\nlabels lab of q { a, b, c }\n"
    inst = gl.InstanceSet()
    inst.add_instance("q1", "q")
    prog = build(src, inst, {"q1": {"a": 0.7, "b": 0.2, "c": 0.1}})
    assert prog.num_vars == 3
    assert prog.num_aux == 0
    assert len(prog.rows) == 1
    assert prog.rows[0].sense == ilp.EQ and prog.rows[0].rhs == 1
    assert prog.objective == [
        math.log(0.7),
        math.log(0.2),
        math.log(0.1),
    ]


def test_sudoku_compile_counts():
    prog = build(
        taskgraphs.sudoku_graph_source(),
        taskgraphs.sudoku_instances(gl),
        taskgraphs.sudoku_scores(),
    )
    assert prog.num_vars == 64
    assert prog.num_aux == 0
    eq_rows = [r for r in prog.rows if r.sense == ilp.EQ]
    le_rows = [r for r in prog.rows if r.sense == ilp.LE]
    assert len(eq_rows) == 16  # structural and constraint rows merged
    assert len(le_rows) == 48
    assert len(prog.rows) == 64
    for r in le_rows:
        assert r.rhs == 1 and all(c == 1 for _, c in r.terms)


def test_wiqa_compile_root_fixed():
    g = gl.parse(taskgraphs.WIQA_GRAPH).graph
    inst = taskgraphs.wiqa_instances(gl)
    table = ilp.ScoreTable.from_json(taskgraphs.WIQA_SCORES, g, inst)
    prog = ilp.compile(gl.ground(g, inst), table)
    assert prog.num_vars - prog.num_aux == 9
    assert prog.num_aux == 2  # one for the implication-or, one for the and
    # the root auxiliary is pinned by an equality row over a single variable
    root_rows = [
        r
        for r in prog.rows
        if r.sense == ilp.EQ and len(r.terms) == 1 and prog.var_atom[r.terms[0][0]] is None
    ]
    assert len(root_rows) == 1
    (var, coef), = root_rows[0].terms
    assert coef == 1 and root_rows[0].rhs == 1


def test_auxiliaries_have_zero_objective():
    g = gl.parse(taskgraphs.WIQA_GRAPH).graph
    inst = taskgraphs.wiqa_instances(gl)
    table = ilp.ScoreTable.from_json(taskgraphs.WIQA_SCORES, g, inst)
    prog = ilp.compile(gl.ground(g, inst), table)
    for v in range(prog.num_vars):
        if prog.var_atom[v] is None:
            assert prog.objective[v] == 0.0
        else:
            assert math.isfinite(prog.objective[v])


def test_atom_var_in_exactly_one_structural_row():
    prog = build(
        taskgraphs.sudoku_graph_source(),
        taskgraphs.sudoku_instances(gl),
        taskgraphs.sudoku_scores(),
    )
    eq_membership = {v: 0 for v in range(prog.num_vars)}
    for r in prog.rows:
        if r.sense == ilp.EQ and r.rhs == 1 and all(c == 1 for _, c in r.terms):
            for v, _ in r.terms:
                eq_membership[v] += 1
    for v in range(prog.num_vars):
        if prog.var_atom[v] is not None:
            assert eq_membership[v] == 1


def test_missing_score_raises():
    src = "graph g\nconcept q\nlabels lab of q { a, b }\n"
    inst = gl.InstanceSet()
    inst.add_instance("q1", "q")
    with pytest.raises(CompileError):
        build(src, inst, {"q1": {"a": 0.5}})


def test_score_sum_checked():
    src = "graph g\nconcept q\nlabels lab of q { a, b }\n"
    inst = gl.InstanceSet()
    inst.add_instance("q1", "q")
    with pytest.raises(CompileError):
        build(src, inst, {"q1": {"a": 0.9, "b": 0.2}})


def test_score_floor_applied():
    src = "graph g\nconcept q\nlabels lab of q { a, b }\n"
    inst = gl.InstanceSet()
    inst.add_instance("q1", "q")
    g = gl.parse(src).graph
    table = ilp.ScoreTable.from_json({"q1": {"a": 1.0, "b": 0.0}}, g, inst)
    assert table.prob("q1", "b") == ilp.EPS
    assert math.isfinite(table.logp("q1", "b"))
