"""Binding layer: records to instances, specs, and model scoring."""

import json
import logging
import math

import httpx
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import taskgraphs
from nesyflow import graphlang as gl
from nesyflow.binding import (
    BindingSpec,
    DatasetRecord,
    ModelConfig,
    alias_table,
    bind,
    bind_edges,
    bind_properties,
    bind_relations,
    load_records,
    parse_answer,
    parse_records,
    predict,
    render_prompt,
    score_table_json,
)
from nesyflow.errors import BindingError, ModelError
from nesyflow.graphlang.ground import Instance
from nesyflow.ilp.scores import EPS

WIQA = gl.parse(taskgraphs.WIQA_GRAPH).graph
IOB = gl.parse(taskgraphs.IOB_GRAPH).graph

WIQA_SPEC = BindingSpec.from_json(
    {
        "properties": [
            {"kind": "reader", "concept": "paragraph", "property": "text", "field": "text"},
            {"kind": "reader", "concept": "question", "property": "text", "field": "text"},
            {"kind": "label-reader", "concept": "question", "property": "answer", "field": "gold"},
        ],
        "edges": [{"relation": "paragraph_questions", "field": "questions"}],
        "relations": [{"relation": "transitivity", "field": "triples"}],
        "models": [
            {
                "label_set": "answer",
                "mode": "mock",
                "prompt": "Q: {text}",
                "labels": ["is_more", "is_less", "no_effect"],
                "scores": {"is_more": 0.5, "is_less": 0.3, "no_effect": 0.2},
            }
        ],
    }
)

WIQA_RECORDS = [
    DatasetRecord(
        "p1",
        {
            "text": "less rain falls",
            "questions": [
                {"id": "q1", "text": "does runoff increase?", "gold": "is_less"},
                {"id": "q2", "text": "do rivers swell?", "gold": "is_less"},
                {"id": "q3", "text": "does erosion increase?", "gold": "is_less"},
            ],
            "triples": [[0, 1, 2]],
        },
    )
]


def test_wiqa_bind_full():
    inst = bind(WIQA_RECORDS, WIQA_SPEC, WIQA)
    para = inst.get("p1")
    assert para.concept == "paragraph"
    assert para.properties["text"] == "less rain falls"
    qs = inst.instances_of("question")
    assert [q.id for q in qs] == ["q1", "q2", "q3"]
    assert qs[0].properties["text"] == "does runoff increase?"
    assert qs[0].gold == {"answer": "is_less"}
    assert list(inst.tuples_of("paragraph_questions")) == [
        ("p1", "q1"),
        ("p1", "q2"),
        ("p1", "q3"),
    ]
    assert list(inst.tuples_of("transitivity")) == [("q1", "q2", "q3")]


def test_bound_instances_ground_and_solve():
    inst = bind(WIQA_RECORDS, WIQA_SPEC, WIQA)
    grounded = gl.ground(WIQA, inst)
    assert len(grounded.formulas) == 1


def test_empty_dataset():
    inst = bind([], WIQA_SPEC, WIQA)
    assert len(inst) == 0


def test_missing_field_names_record_and_field():
    records = [DatasetRecord("p9", {"questions": [], "triples": []})]
    with pytest.raises(BindingError) as e:
        bind(records, WIQA_SPEC, WIQA)
    assert e.value.code == "missing-field"
    assert "p9" in str(e.value) and "text" in str(e.value)


def test_edge_empty_list_keeps_parent():
    records = [DatasetRecord("p2", {"text": "t", "questions": [], "triples": []})]
    inst = bind(records, WIQA_SPEC, WIQA)
    assert [i.id for i in inst.instances] == ["p2"]
    assert list(inst.tuples_of("paragraph_questions")) == []


def test_edge_field_not_a_list():
    records = [DatasetRecord("p3", {"text": "t", "questions": "q?", "triples": []})]
    with pytest.raises(BindingError) as e:
        bind(records, WIQA_SPEC, WIQA)
    assert e.value.code == "type-mismatch"


IOB_SPEC = BindingSpec.from_json(
    {
        "properties": [
            {"kind": "reader", "concept": "token", "property": "text", "field": "tokens"},
            {"kind": "label-reader", "concept": "token", "property": "tag", "field": "labels"},
        ],
        "edges": [{"relation": "sentence_tokens", "field": "tokens"}],
        "relations": [{"relation": "adjacent", "field": "pairs"}],
        "models": [],
    }
)


def test_parallel_list_tokens():
    # scalar elements resolve child properties through same-length lists
    records = [
        DatasetRecord(
            "s1",
            {
                "tokens": ["EU", "rejects", "call"],
                "labels": ["B", "O", "O"],
                "pairs": [[0, 1], [1, 2]],
            },
        )
    ]
    inst = bind(records, IOB_SPEC, IOB)
    toks = inst.instances_of("token")
    assert [t.properties["text"] for t in toks] == ["EU", "rejects", "call"]
    assert [t.gold["tag"] for t in toks] == ["B", "O", "O"]
    ids = [t.id for t in toks]
    assert list(inst.tuples_of("adjacent")) == [(ids[0], ids[1]), (ids[1], ids[2])]


def test_relation_tuple_per_entry():
    assert bind_relations(WIQA_RECORDS, WIQA_SPEC, WIQA) == {
        "transitivity": [("q1", "q2", "q3")]
    }


def test_relation_empty_and_absent_field():
    records = [
        DatasetRecord("p4", {"text": "t", "questions": [], "triples": []}),
        DatasetRecord("p5", {"text": "t", "questions": []}),  # no triples field
    ]
    assert bind_relations(records, WIQA_SPEC, WIQA) == {"transitivity": []}


def test_relation_arity_mismatch():
    records = [
        DatasetRecord(
            "p6",
            {"text": "t", "questions": [{"text": "q", "gold": "is_more"}] * 0, "triples": [[0, 1]]},
        )
    ]
    with pytest.raises(BindingError) as e:
        bind(records, WIQA_SPEC, WIQA)
    assert e.value.code == "arity-mismatch"


def test_relation_index_out_of_range():
    records = [
        DatasetRecord(
            "p7",
            {
                "text": "t",
                "questions": [{"text": "q", "gold": "is_more"}],
                "triples": [[0, 0, 5]],
            },
        )
    ]
    with pytest.raises(BindingError) as e:
        bind(records, WIQA_SPEC, WIQA)
    assert e.value.code == "index-out-of-range"


def test_bind_properties_roots_only():
    inst = bind_properties(WIQA_RECORDS, WIQA_SPEC, WIQA)
    assert [i.id for i in inst.instances] == ["p1"]
    assert inst.get("p1").properties["text"] == "less rain falls"
    assert list(inst.relations) == []


def test_bind_edges_listing():
    edges = bind_edges(WIQA_RECORDS, WIQA_SPEC, WIQA)
    assert edges == [
        ("paragraph_questions", "p1", "q1"),
        ("paragraph_questions", "p1", "q2"),
        ("paragraph_questions", "p1", "q3"),
    ]


def test_generated_child_ids():
    records = [
        DatasetRecord(
            "p8",
            {
                "text": "t",
                "questions": [{"text": "a", "gold": "is_more"}, {"text": "b", "gold": "is_less"}],
                "triples": [],
            },
        )
    ]
    inst = bind(records, WIQA_SPEC, WIQA)
    assert [q.id for q in inst.instances_of("question")] == [
        "p8.paragraph_questions.0",
        "p8.paragraph_questions.1",
    ]


def test_bad_gold_value_is_type_mismatch():
    records = [
        DatasetRecord(
            "p9",
            {"text": "t", "questions": [{"text": "q", "gold": "maybe"}], "triples": []},
        )
    ]
    with pytest.raises(BindingError) as e:
        bind(records, WIQA_SPEC, WIQA)
    assert e.value.code == "type-mismatch"


# --- spec validation ---------------------------------------------------------


def _spec(**overrides):
    data = WIQA_SPEC.to_json()
    data.update(overrides)
    return BindingSpec.from_json(data)


def test_validate_unknown_concept():
    bad = _spec(properties=[{"kind": "reader", "concept": "ghost", "property": "x", "field": "x"}])
    with pytest.raises(BindingError) as e:
        bad.validate(WIQA)
    assert e.value.code == "unknown-concept"


def test_validate_edge_must_be_contains():
    bad = _spec(edges=[{"relation": "transitivity", "field": "questions"}])
    with pytest.raises(BindingError) as e:
        bad.validate(WIQA)
    assert e.value.code == "not-contains"


def test_validate_relation_must_be_has_a():
    bad = _spec(relations=[{"relation": "paragraph_questions", "field": "triples"}])
    with pytest.raises(BindingError) as e:
        bad.validate(WIQA)
    assert e.value.code == "not-has-a"


def test_validate_duplicate_model():
    m = WIQA_SPEC.to_json()["models"][0]
    bad = _spec(models=[m, dict(m)])
    with pytest.raises(BindingError) as e:
        bad.validate(WIQA)
    assert e.value.code == "duplicate-model"


def test_validate_label_mismatch():
    m = dict(WIQA_SPEC.to_json()["models"][0])
    m["labels"] = ["is_more", "is_less"]
    m["scores"] = {"is_more": 0.5, "is_less": 0.5}
    bad = _spec(models=[m])
    with pytest.raises(BindingError) as e:
        bad.validate(WIQA)
    assert e.value.code == "label-mismatch"


def test_validate_label_reader_set():
    bad = _spec(
        properties=[{"kind": "label-reader", "concept": "question", "property": "text", "field": "gold"}]
    )
    with pytest.raises(BindingError) as e:
        bad.validate(WIQA)
    assert e.value.code == "unknown-label-set"


def test_spec_round_trip():
    assert BindingSpec.from_json(WIQA_SPEC.to_json()) == WIQA_SPEC


# --- records ------------------------------------------------------------------


def test_parse_records_shapes():
    lines = ['{"id": "a", "x": 1}', "", '{"id": "b", "x": [1, 2]}']
    records = parse_records(lines)
    assert [r.id for r in records] == ["a", "b"]
    assert records[1].fields == {"x": [1, 2]}


def test_parse_records_rejects_duplicates_and_junk():
    with pytest.raises(BindingError):
        parse_records(['{"id": "a"}', '{"id": "a"}'])
    with pytest.raises(BindingError):
        parse_records(["not json"])
    with pytest.raises(BindingError):
        parse_records(['{"x": 1}'])
    with pytest.raises(BindingError):
        parse_records(['{"id": ""}'])


def test_load_records(tmp_path):
    p = tmp_path / "data.jsonl"
    p.write_text('{"id": "r1", "text": "hi"}\n{"id": "r2", "text": "yo"}\n')
    assert [r.id for r in load_records(p)] == ["r1", "r2"]


# --- answer parsing -----------------------------------------------------------

WIQA_LABELS = ("is_more", "is_less", "no_effect")


def test_alias_table_rows():
    # every (alias, label) pair, in priority order; "is" drops as a stopword
    assert alias_table(WIQA_LABELS) == [
        ("is_more", "is_more"),
        ("is more", "is_more"),
        ("more", "is_more"),
        ("is_less", "is_less"),
        ("is less", "is_less"),
        ("less", "is_less"),
        ("no_effect", "no_effect"),
        ("no effect", "no_effect"),
        ("no", "no_effect"),
        ("effect", "no_effect"),
    ]


@pytest.mark.parametrize(
    "answer,expected",
    [
        ("is_more", "is_more"),  # exact
        ("  IS_MORE  ", "is_more"),  # case-folded exact
        ("The answer is: less effect", "is_less"),  # earliest alias hit wins
        ("no effect", "no_effect"),  # longer alias beats its own tokens
        ("I think there will be more.", "is_more"),
        ("endless options", None),  # word boundary: "less" not inside "endless"
        ("beats me", None),
    ],
)
def test_parse_answer(answer, expected):
    assert parse_answer(answer, WIQA_LABELS) == expected


def test_parse_answer_exhaustive_alias_round_trip():
    for alias, label in alias_table(WIQA_LABELS):
        assert parse_answer(f"The answer is {alias}.", WIQA_LABELS) == label


# --- predict -----------------------------------------------------------------

MOCK_CONFIG = WIQA_SPEC.models[0]
Q = Instance("q1", "question", {"text": "does it rain more?"})


def test_mock_predict_passthrough():
    row = predict(MOCK_CONFIG, Q)
    assert row == pytest.approx({"is_more": 0.5, "is_less": 0.3, "no_effect": 0.2})


def test_mock_per_instance_override():
    config = ModelConfig(
        "answer",
        "mock",
        "Q: {text}",
        WIQA_LABELS,
        scores={"is_more": 1, "is_less": 1, "no_effect": 1},
        scores_by_instance={"q1": {"is_more": 0.8, "is_less": 0.1, "no_effect": 0.1}},
    )
    assert predict(config, Q)["is_more"] == pytest.approx(0.8)
    other = Instance("q2", "question", {"text": "?"})
    assert predict(config, other)["is_more"] == pytest.approx(1 / 3)


def test_mock_zero_prob_gets_floor():
    config = ModelConfig(
        "answer", "mock", "", WIQA_LABELS,
        scores={"is_more": 1.0, "is_less": 0.0, "no_effect": 0.0},
    )
    row = predict(config, Q)
    assert row["is_less"] >= EPS
    assert math.isclose(sum(row.values()), 1.0, abs_tol=1e-6)


def test_render_prompt_unresolved_placeholder():
    config = ModelConfig("answer", "mock", "Q: {missing}", WIQA_LABELS, scores=MOCK_CONFIG.scores)
    with pytest.raises(ModelError) as e:
        predict(config, Q)
    assert e.value.code == "unresolved-placeholder"


def _remote_client(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


REMOTE_CONFIG = ModelConfig("answer", "remote", "Q: {text}", WIQA_LABELS)


def test_remote_exact_answer_one_hot(monkeypatch):
    monkeypatch.setenv("NESY_MODEL_URL", "http://model.test/v1/chat")
    seen = {}

    def handler(request):
        seen["payload"] = json.loads(request.content)
        return httpx.Response(
            200, json={"choices": [{"message": {"content": "is_more"}}]}
        )

    row = predict(REMOTE_CONFIG, Q, client=_remote_client(handler))
    assert row["is_more"] == pytest.approx(1.0, abs=1e-6)
    assert row["is_less"] == EPS and row["no_effect"] == EPS
    assert math.isclose(sum(row.values()), 1.0, abs_tol=1e-6)
    assert seen["payload"]["messages"] == [{"role": "user", "content": "Q: does it rain more?"}]


def test_remote_unparseable_scores_uniform(monkeypatch, caplog):
    monkeypatch.setenv("NESY_MODEL_URL", "http://model.test/v1/chat")

    def handler(request):
        return httpx.Response(200, json={"choices": [{"message": {"content": "zzz"}}]})

    with caplog.at_level(logging.WARNING):
        row = predict(REMOTE_CONFIG, Q, client=_remote_client(handler))
    assert row == pytest.approx({l: 1 / 3 for l in WIQA_LABELS})
    assert any("matched no label" in r.message for r in caplog.records)


def test_remote_http_failure(monkeypatch):
    monkeypatch.setenv("NESY_MODEL_URL", "http://model.test/v1/chat")

    def handler(request):
        return httpx.Response(500, text="boom")

    with pytest.raises(ModelError) as e:
        predict(REMOTE_CONFIG, Q, client=_remote_client(handler))
    assert e.value.code == "http"


def test_remote_needs_endpoint(monkeypatch):
    monkeypatch.delenv("NESY_MODEL_URL", raising=False)
    with pytest.raises(ModelError) as e:
        predict(REMOTE_CONFIG, Q)
    assert e.value.code == "model-endpoint"


def test_remote_sends_bearer_key(monkeypatch):
    monkeypatch.setenv("NESY_MODEL_URL", "http://model.test/v1/chat")
    monkeypatch.setenv("NESY_MODEL_KEY", "sk-test")
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("Authorization")
        return httpx.Response(200, json={"choices": [{"message": {"content": "is_less"}}]})

    predict(REMOTE_CONFIG, Q, client=_remote_client(handler))
    assert seen["auth"] == "Bearer sk-test"


def test_gold_never_reaches_scores():
    inst = bind(WIQA_RECORDS, WIQA_SPEC, WIQA)
    table = score_table_json(WIQA_SPEC.models, inst, WIQA)
    assert set(table) == {"q1", "q2", "q3"}
    # identical rows regardless of gold labels; gold lives on its own channel
    assert table["q1"] == table["q2"] == table["q3"]
    for row in table.values():
        assert set(row) == set(WIQA_LABELS)
        assert "is_less" not in row or isinstance(row["is_less"], float)


@given(
    st.lists(st.floats(min_value=0, max_value=100), min_size=3, max_size=3),
)
def test_mock_rows_are_distributions(raw):
    assume(sum(raw) > 0)
    scores = dict(zip(WIQA_LABELS, raw))
    config = ModelConfig("answer", "mock", "", WIQA_LABELS, scores=scores)
    row = predict(config, Q)
    assert math.isclose(sum(row.values()), 1.0, abs_tol=1e-6)
    assert all(p >= EPS for p in row.values())
