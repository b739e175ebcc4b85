"""The session state machine: one phase transition per step, human gates,
attempt limits, and an append-only event log.

Every state change is an event; applying the log in order reconstructs the
session exactly, so persistence and the HTTP layer only ever store events.
Events carry no timestamps, which keeps replay byte-deterministic; wall-clock
metadata belongs to whoever stores the log.

Phase map (step drives the left column, humans the right):

    RagSelect ──────────→ GraphDesign
    GraphDesign ────────→ GraphCheck            (designer draft, counter += 1)
    GraphCheck ─────────→ GraphDesign           (a check failed, counter < limit)
                     └──→ GraphHumanGate        (both passed, or limit hit)
    GraphHumanGate ─────→ SensorDesign          (approve)
                     └──→ GraphDesign           (revise: notes cleared, counter 0)
    SensorDesign ───────→ SensorHumanGate       (one automatic refinement at most)
    SensorHumanGate ────→ PropertyInput         (approve or edit)
    PropertyInput ──────→ PropertyDesignate     (mapping provided)
    PropertyDesignate ──→ Export                (prompts designated)
    Export ─────────────→ Done | Failed
"""

from __future__ import annotations

import json
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import agents
from .binding import BindingSpec, DatasetRecord, bind
from .errors import (
    AgentError,
    GateMismatchError,
    NesyError,
    PhaseError,
)
from .export import make_bundle
from .graphlang import ground, parse, validate
from .graphlang.ground import InstanceSet

RAG_SELECT = "RagSelect"
GRAPH_DESIGN = "GraphDesign"
GRAPH_CHECK = "GraphCheck"
GRAPH_HUMAN_GATE = "GraphHumanGate"
SENSOR_DESIGN = "SensorDesign"
SENSOR_HUMAN_GATE = "SensorHumanGate"
PROPERTY_INPUT = "PropertyInput"
PROPERTY_DESIGNATE = "PropertyDesignate"
EXPORT = "Export"
DONE = "Done"
FAILED = "Failed"

PHASES = (
    RAG_SELECT,
    GRAPH_DESIGN,
    GRAPH_CHECK,
    GRAPH_HUMAN_GATE,
    SENSOR_DESIGN,
    SENSOR_HUMAN_GATE,
    PROPERTY_INPUT,
    PROPERTY_DESIGNATE,
    EXPORT,
    DONE,
    FAILED,
)

DEFAULT_ATTEMPT_LIMIT = 3
RAG_K = 5


@dataclass
class HumanDecision:
    gate: str  # "graph" | "sensor"
    action: str  # "approve" | "revise" | "edit"
    feedback: str = ""
    edited: str = ""


@dataclass
class StepOutcome:
    kind: str  # "advanced" | "awaiting-human" | "completed" | "failed"
    gate: str | None = None
    view: dict | None = None
    bundle: dict | None = None
    reason: str | None = None


@dataclass
class Session:
    id: str = ""
    task: str = ""
    exclude: tuple = ()
    limit: int = DEFAULT_ATTEMPT_LIMIT
    dataset: list = field(default_factory=list)
    phase: str = RAG_SELECT
    events: list = field(default_factory=list)
    rag_picks: list = field(default_factory=list)
    drafts: list = field(default_factory=list)
    attempts: int = 0
    executor_notes: list = field(default_factory=list)
    reviewer_notes: list = field(default_factory=list)
    feedback: str = ""
    graph_source: str | None = None
    sensor_draft: str | None = None
    sensor_attempts: int = 0
    sensor_notes: list = field(default_factory=list)
    mapping: str | None = None
    prompts: dict | None = None
    bundle: dict | None = None
    failure: str | None = None

    def dataset_fields(self) -> list[str]:
        return sorted({k for r in self.dataset for k in r if k != "id"})

    def records(self) -> list[DatasetRecord]:
        return [
            DatasetRecord(r["id"], {k: v for k, v in r.items() if k != "id"})
            for r in self.dataset
        ]

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "task": self.task,
            "exclude": list(self.exclude),
            "limit": self.limit,
            "phase": self.phase,
            "rag_picks": list(self.rag_picks),
            "drafts": list(self.drafts),
            "attempts": self.attempts,
            "executor_notes": list(self.executor_notes),
            "reviewer_notes": list(self.reviewer_notes),
            "feedback": self.feedback,
            "graph_source": self.graph_source,
            "sensor_draft": self.sensor_draft,
            "sensor_attempts": self.sensor_attempts,
            "sensor_notes": list(self.sensor_notes),
            "mapping": self.mapping,
            "prompts": self.prompts,
            "bundle": self.bundle,
            "failure": self.failure,
            "attempt_tuple": list(attempt_tuple(self)),
        }


# --- event sourcing -----------------------------------------------------------


def apply_event(session: Session, event: dict) -> None:
    """Reduce one event into the session. The only place state changes."""
    kind = event["type"]
    data = event["data"]
    if kind == "session-started":
        session.id = data["id"]
        session.task = data["task"]
        session.exclude = tuple(data["exclude"])
        session.limit = data["limit"]
        session.dataset = data["dataset"]
        session.phase = RAG_SELECT
    elif kind == "rag-selected":
        session.rag_picks = list(data["ids"])
        session.phase = GRAPH_DESIGN
    elif kind == "graph-draft":
        session.drafts.append(data["source"])
        session.attempts += 1
        session.phase = GRAPH_CHECK
    elif kind == "graph-check":
        if not data["executor_ok"]:
            session.executor_notes.append(data["executor_notes"])
        if data["verdict"] == agents.REVISE and data["reviewer_notes"]:
            session.reviewer_notes.append(data["reviewer_notes"])
        passed = data["executor_ok"] and data["verdict"] == agents.APPROVE
        if passed or session.attempts >= session.limit:
            session.phase = GRAPH_HUMAN_GATE
        else:
            session.phase = GRAPH_DESIGN
    elif kind == "human-decision":
        if data["gate"] == "graph":
            if data["action"] == "approve":
                session.graph_source = session.drafts[-1]
                session.phase = SENSOR_DESIGN
            else:  # revise: reset loop state, keep draft history
                session.executor_notes = []
                session.reviewer_notes = []
                session.attempts = 0
                session.feedback = data["feedback"]
                session.phase = GRAPH_DESIGN
        else:  # sensor gate
            if data["action"] == "edit":
                session.sensor_draft = data["edited"]
            session.phase = PROPERTY_INPUT
    elif kind == "sensor-draft":
        session.sensor_draft = data["spec"]
        session.sensor_attempts += 1
        session.phase = SENSOR_DESIGN
    elif kind == "sensor-check":
        if not data["ok"]:
            session.sensor_notes.append(data["notes"])
        if data["ok"] or session.sensor_attempts >= 2:
            session.phase = SENSOR_HUMAN_GATE
    elif kind == "mapping-provided":
        session.mapping = data["text"]
        session.phase = PROPERTY_DESIGNATE
    elif kind == "prompts-designated":
        session.prompts = data["prompts"]
        session.phase = EXPORT
    elif kind == "exported":
        session.bundle = data["bundle"]
        session.phase = DONE
    elif kind == "failed":
        session.failure = data["reason"]
        session.phase = FAILED
    elif kind == "agent-error":
        pass  # recorded for audit; phase untouched so the step can retry
    else:
        raise PhaseError(f"unknown event type {kind!r}", code="bad-event")


def _append(session: Session, kind: str, data: dict) -> dict:
    event = {"seq": len(session.events) + 1, "type": kind, "data": data}
    apply_event(session, event)
    session.events.append(event)
    return event


def replay(events) -> Session:
    session = Session()
    for i, event in enumerate(events, start=1):
        if event["seq"] != i:
            raise PhaseError(
                f"event log gap: expected seq {i}, found {event['seq']}",
                code="bad-event",
            )
        apply_event(session, event)
        session.events.append(event)
    return session


def attempt_tuple(session: Session) -> tuple[int, int, int]:
    """(graph drafts, reviewer revises, executor failures) across the log."""
    drafts = revises = failures = 0
    for event in session.events:
        if event["type"] == "graph-draft":
            drafts += 1
        elif event["type"] == "graph-check":
            if event["data"]["verdict"] == agents.REVISE:
                revises += 1
            if not event["data"]["executor_ok"]:
                failures += 1
    return (drafts, revises, failures)


# --- operations ----------------------------------------------------------------


def start(
    task: str,
    *,
    dataset: list | None = None,
    exclude=(),
    limit: int = DEFAULT_ATTEMPT_LIMIT,
    session_id: str | None = None,
) -> Session:
    if not task or not task.strip():
        raise PhaseError("task description is empty", code="empty-task")
    session = Session()
    _append(
        session,
        "session-started",
        {
            "id": session_id or uuid.uuid4().hex[:12],
            "task": task,
            "exclude": list(exclude),
            "limit": limit,
            "dataset": list(dataset or []),
        },
    )
    return session


def executor_check(source: str) -> tuple[bool, str]:
    """Parse + validate + smoke-ground a draft; (ok, diagnostics text)."""
    result = parse(source)
    diags = list(result.diagnostics)
    if result.ok:
        diags += validate(result.graph)
    errors = [d for d in diags if d.severity == "error"]
    if not errors and result.ok:
        try:
            ground(result.graph, InstanceSet())
        except NesyError as e:
            return False, str(e)
        return True, ""
    lines = [
        f"{d.severity} {d.code} at line {d.span.line}: {d.message}" for d in errors
    ]
    return False, "\n".join(lines)


def sensor_check(spec_text: str, session: Session) -> tuple[bool, str]:
    """Parse the binding-spec JSON, validate it against the approved graph,
    and smoke-bind the session dataset."""
    result = parse(session.graph_source)
    if result.graph is None:
        first = result.errors()[0]
        return False, f"approved graph no longer parses: {first.message}"
    try:
        spec = BindingSpec.from_json(json.loads(spec_text))
        spec.validate(result.graph)
        bind(session.records(), spec, result.graph)
    except ValueError as e:
        return False, f"spec is not valid JSON: {e}"
    except NesyError as e:
        return False, str(e)
    return True, ""


def _gate_outcome(session: Session) -> StepOutcome:
    if session.phase == GRAPH_HUMAN_GATE:
        view = {
            "draft": session.drafts[-1] if session.drafts else None,
            "executor_notes": list(session.executor_notes),
            "reviewer_notes": list(session.reviewer_notes),
            "attempts": session.attempts,
            "limit": session.limit,
        }
        return StepOutcome("awaiting-human", gate="graph", view=view)
    if session.phase == SENSOR_HUMAN_GATE:
        view = {
            "spec": session.sensor_draft,
            "notes": list(session.sensor_notes),
            "attempts": session.sensor_attempts,
        }
        return StepOutcome("awaiting-human", gate="sensor", view=view)
    view = {"graph": session.graph_source, "spec": session.sensor_draft}
    return StepOutcome("awaiting-human", gate="mapping", view=view)


def _run(session: Session, role: str, backend, prompt: str):
    try:
        return agents.run_agent(role, backend, prompt)
    except AgentError as e:
        _append(
            session,
            "agent-error",
            {"role": role, "code": e.code, "message": str(e)},
        )
        raise


def step(session: Session, backend, store=None) -> StepOutcome:
    """Execute exactly one transition. Gates return awaiting-human without
    touching the log; agent failures append an agent-error event, leave the
    phase unchanged, and re-raise so the caller can retry."""
    phase = session.phase
    if phase in (DONE, FAILED):
        raise PhaseError(f"session is {phase}", code="finished")

    if phase in (GRAPH_HUMAN_GATE, SENSOR_HUMAN_GATE, PROPERTY_INPUT):
        return _gate_outcome(session)

    if phase == RAG_SELECT:
        ids = []
        if store is not None:
            ids = [
                e.id
                for e, _ in store.retrieve(session.task, k=RAG_K, exclude=session.exclude)
            ]
        _append(session, "rag-selected", {"ids": ids})
        return StepOutcome("advanced")

    if phase == GRAPH_DESIGN:
        examples = [store.get(i) for i in session.rag_picks] if store is not None else []
        prompt = agents.assemble_prompt(agents.GRAPH_DESIGNER, session, examples)
        out = _run(session, agents.GRAPH_DESIGNER, backend, prompt)
        _append(session, "graph-draft", {"source": out.code})
        return StepOutcome("advanced")

    if phase == GRAPH_CHECK:
        draft = session.drafts[-1]
        reviewer_prompt = agents.assemble_prompt(agents.GRAPH_REVIEWER, session)
        with ThreadPoolExecutor(max_workers=2) as pool:
            check_f = pool.submit(executor_check, draft)
            review_f = pool.submit(
                _run, session, agents.GRAPH_REVIEWER, backend, reviewer_prompt
            )
            ok, notes = check_f.result()
            review = review_f.result()
        _append(
            session,
            "graph-check",
            {
                "executor_ok": ok,
                "executor_notes": notes,
                "verdict": review.verdict,
                "reviewer_notes": review.notes,
            },
        )
        if session.phase == GRAPH_HUMAN_GATE:
            return _gate_outcome(session)
        return StepOutcome("advanced")

    if phase == SENSOR_DESIGN:
        examples = [store.get(i) for i in session.rag_picks] if store is not None else []
        for _ in range(2):  # first draft, then at most one automatic refinement
            prompt = agents.assemble_prompt(agents.SENSOR_DESIGNER, session, examples)
            out = _run(session, agents.SENSOR_DESIGNER, backend, prompt)
            _append(session, "sensor-draft", {"spec": out.code})
            ok, notes = sensor_check(out.code, session)
            _append(session, "sensor-check", {"ok": ok, "notes": notes})
            if session.phase == SENSOR_HUMAN_GATE:
                break
        return _gate_outcome(session)

    if phase == PROPERTY_DESIGNATE:
        prompt = agents.assemble_prompt(agents.PROPERTY_DESIGNATOR, session)
        out = _run(session, agents.PROPERTY_DESIGNATOR, backend, prompt)
        try:
            prompts = json.loads(out.code)
            if not isinstance(prompts, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in prompts.items()
            ):
                raise ValueError("expected an object of label_set -> prompt")
        except ValueError as e:
            error = AgentError(f"prompt designation unusable: {e}", code="bad-response")
            _append(
                session,
                "agent-error",
                {
                    "role": agents.PROPERTY_DESIGNATOR,
                    "code": error.code,
                    "message": str(error),
                },
            )
            raise error
        _append(session, "prompts-designated", {"prompts": prompts})
        return StepOutcome("advanced")

    # Export
    try:
        bundle = make_bundle(session)
    except NesyError as e:
        _append(session, "failed", {"reason": str(e)})
        return StepOutcome("failed", reason=str(e))
    _append(session, "exported", {"bundle": bundle})
    return StepOutcome("completed", bundle=bundle)


def submit_human(session: Session, decision: HumanDecision) -> Session:
    if session.phase == GRAPH_HUMAN_GATE:
        if decision.gate != "graph":
            raise GateMismatchError(
                f"session is at the graph gate, got decision for {decision.gate!r}"
            )
        if decision.action not in ("approve", "revise"):
            raise PhaseError(
                f"graph gate accepts approve or revise, not {decision.action!r}",
                code="bad-decision",
            )
    elif session.phase == SENSOR_HUMAN_GATE:
        if decision.gate != "sensor":
            raise GateMismatchError(
                f"session is at the sensor gate, got decision for {decision.gate!r}"
            )
        if decision.action not in ("approve", "edit"):
            raise PhaseError(
                f"sensor gate accepts approve or edit, not {decision.action!r}",
                code="bad-decision",
            )
        if decision.action == "edit":
            try:
                BindingSpec.from_json(json.loads(decision.edited))
            except ValueError as e:
                raise PhaseError(f"edit is not valid JSON: {e}", code="bad-edit")
    else:
        raise GateMismatchError(f"session is not at a human gate (phase {session.phase})")
    _append(
        session,
        "human-decision",
        {
            "gate": decision.gate,
            "action": decision.action,
            "feedback": decision.feedback,
            "edited": decision.edited,
        },
    )
    return session


def provide_mapping(session: Session, text: str) -> Session:
    if session.phase != PROPERTY_INPUT:
        raise PhaseError(
            f"mapping arrives at PropertyInput, session is at {session.phase}",
            code="bad-phase",
        )
    if not text or not text.strip():
        raise PhaseError("mapping description is empty", code="empty-mapping")
    _append(session, "mapping-provided", {"text": text})
    return session
