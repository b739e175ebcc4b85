"""Command-line front end.

Five subcommands: `run` drives the agent workflow interactively with human
gates on the terminal, `eval` replays a task corpus headless and prints
attempt tuples, `infer` solves a single constrained labeling problem,
`rag` manages the example store, and `serve` starts the HTTP API.

Exit codes: 0 ok, 1 user error, 2 internal failure.  Errors go to stderr
as one JSON object so scripts can parse them.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import agents
from .agents import RemoteBackend, ScriptedBackend
from .binding import BindingSpec, bind, load_records, score_table_json
from .errors import NesyError, PhaseError
from .export import export_notebook, make_bundle, write_bundle
from .graphlang import InstanceSet, parse
from .ilp import DEFAULT_NODE_BUDGET, ScoreTable, infer
from .rag import ExampleEntry, ExampleStore
from .workflow import (
    GRAPH_DESIGN,
    HumanDecision,
    Session,
    attempt_tuple,
    provide_mapping,
    start,
    step,
    submit_human,
)

SAMPLES_DEFAULT = 3


def _fail(code: str, message: str) -> None:
    print(json.dumps({"error": {"code": code, "message": message}}), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; our contract reserves 2 for bugs
    def error(self, message):
        self.print_usage(sys.stderr)
        _fail("usage", message)
        raise SystemExit(1)


def _seed_root() -> Path:
    return Path(__file__).resolve().parent / "seed"


def _data_dir(args) -> Path:
    if args.data_dir:
        return Path(args.data_dir)
    return Path(os.environ.get("NESY_DATA_DIR", "nesy-data"))


def _corpus_store(path: str | None) -> ExampleStore:
    root = Path(path) if path else _seed_root() / "corpus"
    return ExampleStore(root)


def _load_json(path: str):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _backend(args):
    if getattr(args, "scripts", None):
        data = _load_json(args.scripts)
        if not isinstance(data, dict):
            raise PhaseError("scripts file must map role -> replies", code="bad-scripts")
        return ScriptedBackend(scripts=data)
    return RemoteBackend()


# ---------------------------------------------------------------- run

def _say(title: str, body: str = "") -> None:
    print(f"== {title} ==")
    if body:
        print(body if body.endswith("\n") else body + "\n", end="")


def _ask(prompt: str) -> str:
    print(prompt, end="", flush=True)
    line = sys.stdin.readline()
    if not line:
        raise EOFError
    return line.strip()


def _graph_gate(session: Session, view: dict) -> None:
    _say(f"draft {view['attempts']}/{view['limit']}", view["draft"] or "(none)")
    _say("execution log", "\n".join(view["executor_notes"]) or "clean")
    _say("reviewer notes", "\n".join(view["reviewer_notes"]) or "(none)")
    answer = _ask("[graph gate] approve, or revise <feedback>: ")
    if answer == "approve":
        submit_human(session, HumanDecision(gate="graph", action="approve"))
        return
    if answer.startswith("revise"):
        feedback = answer[len("revise"):].strip() or _ask("feedback: ")
        submit_human(
            session, HumanDecision(gate="graph", action="revise", feedback=feedback)
        )
        return
    raise PhaseError(f"unknown gate answer {answer!r}", code="bad-decision")


def _sensor_gate(session: Session, view: dict) -> None:
    _say(f"sensor spec (attempt {view['attempts']})", view["spec"] or "(none)")
    _say("sensor notes", "\n".join(view["notes"]) or "clean")
    answer = _ask("[sensor gate] approve, or edit <json>: ")
    if answer == "approve":
        submit_human(session, HumanDecision(gate="sensor", action="approve"))
        return
    if answer.startswith("edit"):
        edited = answer[len("edit"):].strip() or _ask("edited spec json: ")
        submit_human(
            session, HumanDecision(gate="sensor", action="edit", edited=edited)
        )
        return
    raise PhaseError(f"unknown gate answer {answer!r}", code="bad-decision")


def _mapping_gate(session: Session, view: dict) -> None:
    _say("approved graph", view["graph"] or "(none)")
    text = _ask("[mapping] describe how dataset fields feed the graph: ")
    provide_mapping(session, text)


def cmd_run(args) -> int:
    from .service.store import SessionStore

    store = SessionStore(_data_dir(args))
    rag = _corpus_store(args.corpus)
    backend = _backend(args)

    if args.resume:
        session = store.load(args.resume)
        print(f"resumed {session.id} at {session.phase}")
    else:
        if not args.task:
            raise PhaseError("--task is required unless resuming", code="empty-task")
        dataset = load_records(args.data) if args.data else []
        session = start(
            args.task,
            dataset=[dict(r.fields, id=r.id) for r in dataset],
            limit=args.limit,
        )
        store.save(session)
        print(f"session {session.id}")

    try:
        while True:
            if session.phase == GRAPH_DESIGN:
                # show the exact prompt the designer will answer, feedback included
                examples = [rag.get(i) for i in session.rag_picks if i in rag.ids()]
                preview = agents.assemble_prompt(
                    agents.GRAPH_DESIGNER, session, examples
                )
                _say("prompt to graph designer", preview)
            outcome = step(session, backend, store=rag)
            store.save(session)
            if outcome.kind == "completed":
                out = Path(args.out) if args.out else store.root / session.id / "bundle"
                out.mkdir(parents=True, exist_ok=True)
                write_bundle(outcome.bundle, out)
                (out / "session.ipynb").write_text(
                    export_notebook(outcome.bundle), encoding="utf-8"
                )
                print(f"bundle written to {out}")
                return 0
            if outcome.kind == "failed":
                _fail("export", outcome.reason or "export failed")
                return 1
            if outcome.kind == "awaiting-human":
                if outcome.gate == "graph":
                    _graph_gate(session, outcome.view)
                elif outcome.gate == "sensor":
                    _sensor_gate(session, outcome.view)
                else:
                    _mapping_gate(session, outcome.view)
                store.save(session)
    except (KeyboardInterrupt, EOFError):
        store.save(session)
        print(f"\ninterrupted; continue with: nesyflow run --resume {session.id}")
        return 0


# ---------------------------------------------------------------- eval

def _replay_one(row: dict, rag: ExampleStore):
    """Run one scripted task headless; returns an attempt tuple or None."""
    backend = ScriptedBackend(scripts=row["scripts"])
    session = start(
        row["task"],
        dataset=row.get("dataset", []),
        exclude=row.get("exclude", ()),
    )
    for _ in range(64):
        outcome = step(session, backend, store=rag)
        if outcome.kind == "completed":
            return attempt_tuple(session)
        if outcome.kind == "failed":
            return None
        if outcome.kind == "awaiting-human":
            if outcome.gate == "mapping":
                provide_mapping(session, row["mapping"])
            else:
                submit_human(session, HumanDecision(gate=outcome.gate, action="approve"))
    return None


def _cell(result) -> str:
    if result is None:
        return "Failed"
    a, r, e = result
    return f"({a},{r},{e})"


def cmd_eval(args) -> int:
    tasks_path = Path(args.tasks) if args.tasks else _seed_root() / "eval_tasks.json"
    rows = json.loads(tasks_path.read_text(encoding="utf-8"))["tasks"]
    rows.sort(key=lambda r: r["column"])
    rag = _corpus_store(args.corpus)
    samples = args.samples

    def run_row(row):
        out = []
        for _ in range(samples):
            try:
                out.append(_replay_one(row, rag))
            except NesyError:
                out.append(None)
        return out

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_row, rows))
    else:
        results = [run_row(row) for row in rows]

    for row, runs in zip(rows, results):
        for s, result in enumerate(runs, start=1):
            print(f"task={row['id']} sample=S{s} tuple={_cell(result)}")

    # summary grid: one row per sample, one column per task
    print()
    header = ["Model", "Sample"] + [str(row["column"]) for row in rows]
    grid = [header]
    for s in range(samples):
        grid.append(
            ["scripted", f"S{s + 1}"] + [_cell(runs[s]) for runs in results]
        )
    widths = [max(len(line[i]) for line in grid) for i in range(len(header))]
    for line in grid:
        print("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
    return 0


# ---------------------------------------------------------------- infer

def _instances_from_json(data: dict) -> InstanceSet:
    if not isinstance(data, dict) or "instances" not in data:
        raise PhaseError(
            'data file needs {"instances": [...], "tuples": {...}}', code="bad-data"
        )
    out = InstanceSet()
    for row in data["instances"]:
        out.add_instance(row["id"], row["concept"], row.get("properties"))
    for relation, groups in (data.get("tuples") or {}).items():
        for ids in groups:
            out.add_tuple(relation, tuple(ids))
    return out


def cmd_infer(args) -> int:
    if bool(args.scores) == bool(args.bindings):
        raise PhaseError("pass exactly one of --scores or --bindings", code="usage")
    result = parse(Path(args.graph).read_text(encoding="utf-8"))
    if not result.ok:
        first = result.errors()[0]
        raise PhaseError(
            f"graph does not parse: line {first.span.line}: {first.message}",
            code="bad-graph",
        )
    graph = result.graph

    if args.scores:
        instances = _instances_from_json(_load_json(args.data))
        score_json = _load_json(args.scores)
    else:
        spec = BindingSpec.from_json(_load_json(args.bindings))
        spec.validate(graph)
        instances = bind(load_records(args.data), spec, graph)
        score_json = score_table_json(spec.models, instances, graph)

    scores = ScoreTable.from_json(score_json, graph, instances)
    assignment = infer(graph, instances, scores, node_budget=args.budget)
    print(json.dumps(assignment.to_json(), indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------- rag

def cmd_rag(args) -> int:
    if args.action == "add":
        if not args.corpus:
            raise PhaseError("rag add needs --corpus to know where to write", code="usage")
        store = _corpus_store(args.corpus)
        entry = ExampleEntry.from_json(_load_json(args.entry))
        store.add(entry)
        print(entry.id)
        return 0
    store = _corpus_store(args.corpus)
    if args.action == "list":
        for entry in store.entries:
            print(f"{entry.id}\t{entry.description}")
        return 0
    # query
    if not args.text:
        raise PhaseError("rag query needs text", code="usage")
    for entry, sim in store.retrieve(args.text, k=args.k):
        print(f"{sim:.4f}\t{entry.id}")
    return 0


# ---------------------------------------------------------------- serve

def _parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not port.isdigit():
        raise PhaseError(f"bad --addr {addr!r}, want host:port", code="usage")
    return host or "127.0.0.1", int(port)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, port = _parse_addr(args.addr)
    app = create_app(root=_data_dir(args))
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


# ---------------------------------------------------------------- wiring

def build_parser() -> _Parser:
    parser = _Parser(prog="nesyflow")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="interactive workflow session")
    p.add_argument("--task", help="natural-language task description")
    p.add_argument("--data", help="dataset records, one JSON object per line")
    p.add_argument("--scripts", help="JSON file of scripted agent replies")
    p.add_argument("--limit", type=int, default=3, help="design attempts before the gate")
    p.add_argument("--resume", help="continue a stored session by id")
    p.add_argument("--out", help="bundle output directory")
    p.add_argument("--corpus", help="example store directory")
    p.add_argument("--data-dir", help="session store root")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="headless corpus replay")
    p.add_argument("--tasks", help="tasks file (default: packaged corpus)")
    p.add_argument("--samples", type=int, default=SAMPLES_DEFAULT)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--corpus", help="example store directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="solve one constrained labeling problem")
    p.add_argument("--graph", required=True, help="graph source file")
    p.add_argument("--data", required=True, help="instances JSON, or records with --bindings")
    p.add_argument("--scores", help="probability table JSON")
    p.add_argument("--bindings", help="binding spec JSON; scores come from its models")
    p.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("rag", help="query or extend the example store")
    p.add_argument("action", choices=["query", "list", "add"])
    p.add_argument("text", nargs="?", help="query text")
    p.add_argument("--entry", help="example JSON file for add")
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--corpus", help="example store directory")
    p.set_defaults(func=cmd_rag)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.add_argument("--data-dir", help="session store root")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NesyError as e:
        _fail(e.code, str(e))
        return 1
    except (OSError, ValueError, KeyError) as e:
        _fail("bad-input", f"{type(e).__name__}: {e}")
        return 1
    except SystemExit:
        raise
    except Exception as e:  # noqa: BLE001 - last resort, report and signal a bug
        _fail("internal", f"{type(e).__name__}: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
