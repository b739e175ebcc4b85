"""Parser behavior: shapes, diagnostics, determinism."""

import taskgraphs
from nesyflow import graphlang as gl


def test_wiqa_shape():
    result = gl.parse(taskgraphs.WIQA_GRAPH)
    assert result.ok, result.diagnostics
    g = result.graph
    assert len(g.entity_concepts()) == 2
    assert len(g.label_sets()) == 1
    assert len(g.relations) == 2
    assert len(g.constraints) == 1
    ls = g.label_sets()[0]
    assert ls.labels == ("is_more", "is_less", "no_effect")
    assert ls.parent == "question"
    rel = g.relation("transitivity")
    assert rel.kind == gl.HAS_A
    assert rel.roles == ("first", "second", "third")


def test_minimal_graph():
    result = gl.parse("graph tiny\nconcept city\n")
    assert result.ok
    assert len(result.graph.concepts) == 1
    assert result.graph.relations == []
    assert result.graph.constraints == []


def test_undefined_label_reference():
    src = taskgraphs.WIQA_GRAPH.replace("then third is is_more", "then third is is_most")
    result = gl.parse(src)
    assert not result.ok
    errs = [d for d in result.errors() if d.code == "undefined-reference"]
    assert errs, result.diagnostics
    # span points at the atom, not the start of the constraint
    assert errs[0].span.line >= 10


def test_duplicate_concept():
    result = gl.parse("graph g\nconcept a\nconcept a\n")
    assert any(d.code == "duplicate-declaration" for d in result.errors())


def test_syntax_error_recovers_per_statement():
    src = "graph g\nconcept a\ncontains r (a ->\nconcept b\n"
    result = gl.parse(src)
    assert any(d.code == "syntax-error" for d in result.errors())
    # the following declaration still parsed
    assert result.graph.concept("b") is not None


def test_lexical_error_position():
    result = gl.parse("graph g\nconcept a$\n")
    errs = [d for d in result.diagnostics if d.code == "lexical-error"]
    assert errs and errs[0].span.line == 2 and errs[0].span.col == 10


def test_parse_deterministic():
    a = gl.parse(taskgraphs.WIQA_GRAPH)
    b = gl.parse(taskgraphs.WIQA_GRAPH)
    assert a.graph == b.graph
    assert [d.to_json() for d in a.diagnostics] == [
        d.to_json() for d in b.diagnostics
    ]


def test_diagnostic_json_fields():
    result = gl.parse("graph g\nconcept a\nconcept a\n")
    blob = result.errors()[0].to_json()
    assert set(blob) == {"severity", "code", "message", "line", "col"}


def test_relation_atom_arity_checked():
    src = """\
graph g
concept q
labels lab of q { x, y }
has_a pair (a: q, b: q)
constraint c on pair { pair(a) }
"""
    result = gl.parse(src)
    assert any("takes 2 variables" in d.message for d in result.errors())


def test_count_expressions_parse():
    src = """\
graph g
concept cell
labels digit of cell { d1, d2 }
constraint c on cell { exactly(1, cell is d1, cell is d2) }
"""
    result = gl.parse(src)
    assert result.ok
    body = result.graph.constraints[0].body
    assert isinstance(body, gl.Count) and body.op == "exactly" and body.k == 1


def test_sudoku_and_queens_sources_parse():
    for src in (taskgraphs.sudoku_graph_source(), taskgraphs.queens_graph_source(),
                taskgraphs.mnist_graph_source(), taskgraphs.HIERARCHY_GRAPH,
                taskgraphs.IOB_GRAPH):
        result = gl.parse(src)
        assert result.ok, result.diagnostics
