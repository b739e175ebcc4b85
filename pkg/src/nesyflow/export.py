"""Bundle assembly and notebook emission.

A finished session exports as four files (graph.nsg, bindings.json,
prompts.json, run.json) plus a five-cell notebook that rebuilds and runs the
same program anywhere: setup, graph, dataset, binding spec, inference.  The
graph, dataset, and spec are embedded in the cells as literals; each cell
writes the file the later cells read, so the notebook needs nothing beyond
itself and the installed runtime.

All JSON is serialized with sorted keys, indent 1, and a trailing newline;
identical bundles produce byte-identical documents.
"""

from __future__ import annotations

import json
from pathlib import Path

from .binding import BindingSpec
from .errors import ExportError
from .graphlang import parse, validate
from .ilp.solve import DEFAULT_NODE_BUDGET

BUNDLE_FILES = ("graph.nsg", "bindings.json", "prompts.json", "run.json")


def _dumps(data) -> str:
    return json.dumps(data, ensure_ascii=False, indent=1, sort_keys=True) + "\n"


def make_bundle(session) -> dict:
    """Validate the session's artifacts and assemble the bundle dict.

    Designated prompts are merged into their model bindings so bindings.json
    runs standalone; prompts.json keeps the designated set on its own.
    """
    if not session.graph_source:
        raise ExportError("no approved graph to export", code="incomplete")
    if not session.sensor_draft:
        raise ExportError("no binding spec to export", code="incomplete")
    result = parse(session.graph_source)
    diags = list(result.diagnostics)
    if result.ok:
        diags += validate(result.graph)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ExportError(
            f"approved graph does not check: {errors[0].message}", code="bad-graph"
        )
    try:
        spec = BindingSpec.from_json(json.loads(session.sensor_draft))
        spec.validate(result.graph)
    except ValueError as e:
        raise ExportError(f"binding spec is not valid JSON: {e}", code="bad-spec")
    except ExportError:
        raise
    except Exception as e:
        raise ExportError(f"binding spec does not validate: {e}", code="bad-spec")

    prompts = dict(session.prompts or {})
    bindings = spec.to_json()
    for model in bindings["models"]:
        if model["label_set"] in prompts:
            model["prompt"] = prompts[model["label_set"]]
    run = {
        "task": session.task,
        "mapping": session.mapping or "",
        "graph": "graph.nsg",
        "bindings": "bindings.json",
        "prompts": "prompts.json",
        "data": "dataset.jsonl",
        "mode": "mock",
        "node_budget": DEFAULT_NODE_BUDGET,
    }
    return {
        "graph.nsg": session.graph_source,
        "bindings.json": bindings,
        "prompts.json": prompts,
        "run.json": run,
        "dataset": list(session.dataset),
    }


def write_bundle(bundle: dict, directory) -> list[str]:
    """Write the four bundle files; returns the paths written."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in BUNDLE_FILES:
        path = out / name
        if name.endswith(".json"):
            path.write_text(_dumps(bundle[name]), encoding="utf-8")
        else:
            text = bundle[name]
            path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
        paths.append(str(path))
    return paths


def read_bundle(directory) -> dict:
    root = Path(directory)
    bundle = {}
    for name in BUNDLE_FILES:
        text = (root / name).read_text(encoding="utf-8")
        bundle[name] = json.loads(text) if name.endswith(".json") else text
    return bundle


def _code_cell(cell_id: str, source: str) -> dict:
    lines = source.splitlines(keepends=True)
    return {
        "cell_type": "code",
        "execution_count": None,
        "id": cell_id,
        "metadata": {},
        "outputs": [],
        "source": lines,
    }


def _literal(text: str) -> str:
    """A Python string literal for arbitrary text (JSON string escaping)."""
    return json.dumps(text, ensure_ascii=False)


def notebook_json(bundle: dict) -> dict:
    """The five-cell runnable notebook for a bundle."""
    graph_text = bundle["graph.nsg"]
    if not graph_text.endswith("\n"):
        graph_text += "\n"
    dataset_text = _dumps(bundle["dataset"])
    bindings_text = _dumps(bundle["bindings.json"])

    setup = (
        "# Setup: install the runtime.\n"
        "# Scoring runs in mock mode out of the box; set NESY_MODEL_URL and\n"
        "# NESY_MODEL_KEY before the run cell to score with a live model.\n"
        "%pip install nesyflow\n"
    )
    graph = (
        f"graph_source = {_literal(graph_text)}\n"
        'with open("graph.nsg", "w") as f:\n'
        "    f.write(graph_source)\n"
        "print(graph_source)\n"
    )
    dataset = (
        "import json\n"
        f"records = json.loads({_literal(dataset_text)})\n"
        'with open("dataset.jsonl", "w") as f:\n'
        "    for record in records:\n"
        '        f.write(json.dumps(record, sort_keys=True) + "\\n")\n'
        'print(f"wrote {len(records)} records to dataset.jsonl")\n'
    )
    sensors = (
        "import json\n"
        f"bindings = json.loads({_literal(bindings_text)})\n"
        'with open("bindings.json", "w") as f:\n'
        "    json.dump(bindings, f, indent=1, sort_keys=True)\n"
        'print(json.dumps(bindings["models"], indent=1, sort_keys=True))\n'
    )
    run = "!nesyflow infer --graph graph.nsg --data dataset.jsonl --bindings bindings.json\n"

    return {
        "cells": [
            _code_cell("cell-1", setup),
            _code_cell("cell-2", graph),
            _code_cell("cell-3", dataset),
            _code_cell("cell-4", sensors),
            _code_cell("cell-5", run),
        ],
        "metadata": {"language_info": {"name": "python"}},
        "nbformat": 4,
        "nbformat_minor": 5,
    }


def export_notebook(bundle: dict) -> str:
    """Notebook document text; identical bundles yield identical bytes."""
    return _dumps(notebook_json(bundle))
