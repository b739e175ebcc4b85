"""Agent roles, prompt assembly, and output parsing.

Five LLM roles drive the workflow.  A backend is anything with
``complete(role, prompt) -> text``: the remote backend makes one
chat-completion request per call, the scripted backend replays canned
responses and fails loudly when a script runs dry, which keeps evaluation
runs honest.

Parsing is deliberately rigid.  Designer roles must return a fenced code
block (the first one is taken verbatim); the reviewer must include a
``VERDICT: approve`` or ``VERDICT: revise`` line.  A reviewer reply without
one counts as a revise with the note "malformed review" rather than an
exception, so a sloppy model slows the loop down instead of crashing it.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import httpx

from .errors import AgentError, ScriptExhaustedError

RAG_RERANKER = "rag-selector-reranker"
GRAPH_DESIGNER = "graph-designer"
GRAPH_REVIEWER = "graph-reviewer"
SENSOR_DESIGNER = "sensor-designer"
PROPERTY_DESIGNATOR = "property-designator"

ROLES = frozenset(
    {RAG_RERANKER, GRAPH_DESIGNER, GRAPH_REVIEWER, SENSOR_DESIGNER, PROPERTY_DESIGNATOR}
)
_FENCED_ROLES = frozenset({GRAPH_DESIGNER, SENSOR_DESIGNER, PROPERTY_DESIGNATOR})

APPROVE = "approve"
REVISE = "revise"

_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_VERDICT_RE = re.compile(r"^\s*VERDICT:\s*(approve|revise)\s*$", re.IGNORECASE | re.MULTILINE)
REQUEST_TIMEOUT = 60.0


@dataclass
class AgentOutput:
    raw: str
    code: str | None = None
    verdict: str | None = None
    notes: str = ""


@dataclass
class ScriptedBackend:
    """Plays back responses per role, in order.  kind == "scripted"."""

    scripts: dict[str, list[str]]
    kind: str = "scripted"
    _queues: dict[str, list[str]] = field(init=False)

    def __post_init__(self):
        self._queues = {role: list(items) for role, items in self.scripts.items()}

    def complete(self, role: str, prompt: str) -> str:
        queue = self._queues.get(role)
        if not queue:
            raise ScriptExhaustedError(f"script for {role!r} is exhausted")
        return queue.pop(0)

    def remaining(self, role: str) -> int:
        return len(self._queues.get(role, ()))


@dataclass
class RemoteBackend:
    """One chat-completion request per call against NESY_MODEL_URL."""

    model: str | None = None
    temperature: float = 0.0
    reasoning_effort: str | None = None
    client: httpx.Client | None = None
    kind: str = "remote-llm"

    def complete(self, role: str, prompt: str) -> str:
        url = os.environ.get("NESY_MODEL_URL")
        if not url:
            raise AgentError("NESY_MODEL_URL is not set", code="model-endpoint")
        headers = {"Content-Type": "application/json"}
        key = os.environ.get("NESY_MODEL_KEY")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload: dict = {
            "model": self.model or "default",
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        if self.reasoning_effort:
            payload["reasoning_effort"] = self.reasoning_effort
        try:
            if self.client is not None:
                resp = self.client.post(url, json=payload, headers=headers, timeout=REQUEST_TIMEOUT)
            else:
                resp = httpx.post(url, json=payload, headers=headers, timeout=REQUEST_TIMEOUT)
            resp.raise_for_status()
            return str(resp.json()["choices"][0]["message"]["content"])
        except httpx.HTTPError as e:
            raise AgentError(f"{role} request failed: {e}", code="http")
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise AgentError(f"malformed completion for {role}: {e}", code="bad-response")


def _section(title: str, body: str) -> str:
    return f"== {title} ==\n{body.rstrip()}\n"


def _examples_block(examples) -> str:
    parts = []
    for e in examples:
        parts.append(f"-- {e.id}: {e.description}\n```\n{e.graph_source.rstrip()}\n```")
    return "\n".join(parts)


def assemble_prompt(role: str, session, rag_examples=()) -> str:
    """Deterministic prompt for one agent call, built from session state.

    Revision rounds carry the prior draft plus executor and reviewer notes;
    human feedback, when stored, gets its own section, always verbatim.
    """
    if role not in ROLES:
        raise AgentError(f"unknown agent role {role!r}", code="bad-role")
    task = (session.task or "").strip()
    if not task:
        raise AgentError("session has no task description", code="missing-field")
    examples = [e for e in rag_examples if e.id not in set(session.exclude)]

    parts = [_section("Task", task)]
    if role == GRAPH_DESIGNER:
        if examples:
            parts.append(_section("Examples", _examples_block(examples)))
        if session.drafts:
            parts.append(_section("Previous draft", f"```\n{session.drafts[-1].rstrip()}\n```"))
        if session.executor_notes:
            parts.append(_section("Execution notes", "\n".join(session.executor_notes)))
        if session.reviewer_notes:
            parts.append(_section("Review notes", "\n".join(session.reviewer_notes)))
        if session.feedback:
            parts.append(_section("Human feedback", session.feedback))
        parts.append(
            _section(
                "Instructions",
                "Write the concept graph for this task as one fenced code block.",
            )
        )
    elif role == GRAPH_REVIEWER:
        if not session.drafts:
            raise AgentError("no draft to review", code="missing-field")
        parts.append(_section("Draft", f"```\n{session.drafts[-1].rstrip()}\n```"))
        parts.append(
            _section(
                "Instructions",
                "Review the draft's concepts, relations, and constraints against"
                " the task. End with a line `VERDICT: approve` or `VERDICT: revise`.",
            )
        )
    elif role == SENSOR_DESIGNER:
        parts.append(_section("Approved graph", f"```\n{(session.graph_source or '').rstrip()}\n```"))
        if session.dataset_fields():
            parts.append(_section("Dataset fields", ", ".join(session.dataset_fields())))
        if examples:
            parts.append(_section("Examples", _examples_block(examples)))
        if session.sensor_notes:
            parts.append(_section("Execution notes", "\n".join(session.sensor_notes)))
        parts.append(
            _section(
                "Instructions",
                "Write the binding spec JSON (properties, edges, relations, models)"
                " as one fenced code block.",
            )
        )
    elif role == PROPERTY_DESIGNATOR:
        parts.append(_section("Approved graph", f"```\n{(session.graph_source or '').rstrip()}\n```"))
        parts.append(_section("Binding spec", f"```\n{session.sensor_draft or ''}\n```"))
        if session.mapping:
            parts.append(_section("Dataset mapping", session.mapping))
        parts.append(
            _section(
                "Instructions",
                "Write one prompt per label set as fenced JSON:"
                ' {"label_set": "prompt text with {property} placeholders"}.',
            )
        )
    else:  # RAG_RERANKER
        parts.append(
            _section("Candidates", "\n".join(f"- {e.id}: {e.description}" for e in examples))
        )
        parts.append(_section("Instructions", "Rank candidate ids as fenced JSON list."))
    return "\n".join(parts)


def parse_output(role: str, raw: str) -> AgentOutput:
    m = _FENCE_RE.search(raw)
    code = m.group(1) if m else None
    if role == GRAPH_REVIEWER:
        v = _VERDICT_RE.search(raw)
        if v is None:
            return AgentOutput(raw, code, REVISE, "malformed review")
        notes = _VERDICT_RE.sub("", raw).strip()
        return AgentOutput(raw, code, v.group(1).lower(), notes)
    if role in _FENCED_ROLES and code is None:
        raise AgentError(f"{role} reply has no fenced code block", code="missing-code")
    return AgentOutput(raw, code, None, raw.strip() if code is None else "")


def run_agent(role: str, backend, prompt: str) -> AgentOutput:
    """One completion, parsed under the role's rules."""
    if role not in ROLES:
        raise AgentError(f"unknown agent role {role!r}", code="bad-role")
    return parse_output(role, backend.complete(role, prompt))
