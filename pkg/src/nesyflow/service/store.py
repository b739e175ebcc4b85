"""File-backed session persistence.

One directory per session holding an append-only event log plus a snapshot:

    <root>/<session-id>/events.jsonl   {"seq", "type", "data", "crc"} per line
    <root>/<session-id>/snapshot.json  envelope with the latest state

The log is the source of truth; load() always replays it.  Each line carries
a crc32 over its canonical event JSON, so a line torn by a crash (truncated
or garbled) is detected and replay stops at the last intact event instead of
failing.  The snapshot is written atomically (temp file, then rename) and
serves listings and envelope metadata; timestamps live here, never inside
events, which keeps replay byte-deterministic.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
import zlib
from pathlib import Path

from ..errors import PhaseError
from .. import workflow

_GATES = (workflow.GRAPH_HUMAN_GATE, workflow.SENSOR_HUMAN_GATE, workflow.PROPERTY_INPUT)


def session_status(session: workflow.Session) -> str:
    if session.phase == workflow.DONE:
        return "done"
    if session.phase == workflow.FAILED:
        return "failed"
    if session.phase in _GATES:
        return "awaiting-human"
    return "running"


def _event_crc(event: dict) -> int:
    payload = json.dumps(
        {"seq": event["seq"], "type": event["type"], "data": event["data"]},
        ensure_ascii=False,
        sort_keys=True,
    )
    return zlib.crc32(payload.encode("utf-8"))


class SessionStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def _log(self, session_id: str) -> Path:
        return self._dir(session_id) / "events.jsonl"

    def _snapshot(self, session_id: str) -> Path:
        return self._dir(session_id) / "snapshot.json"

    # --- writing ---------------------------------------------------------

    def save(self, session: workflow.Session, owner: str = "local") -> dict:
        """Append any unpersisted events and refresh the snapshot."""
        folder = self._dir(session.id)
        folder.mkdir(parents=True, exist_ok=True)
        persisted = self._count_valid_lines(self._log(session.id))
        if persisted > len(session.events):
            raise PhaseError(
                f"log for {session.id} has {persisted} events, session has"
                f" {len(session.events)}; refusing to rewind",
                code="bad-event",
            )
        with open(self._log(session.id), "a", encoding="utf-8") as f:
            for event in session.events[persisted:]:
                line = dict(event, crc=_event_crc(event))
                f.write(json.dumps(line, ensure_ascii=False, sort_keys=True) + "\n")
            f.flush()
            os.fsync(f.fileno())
        envelope = self._write_snapshot(session, owner)
        return envelope

    def _write_snapshot(self, session: workflow.Session, owner: str) -> dict:
        now = time.time()
        created = now
        path = self._snapshot(session.id)
        if path.exists():
            try:
                created = json.loads(path.read_text(encoding="utf-8"))["created"]
            except (ValueError, KeyError):
                pass  # rebuilt below from scratch
        envelope = {
            "id": session.id,
            "owner": owner,
            "created": created,
            "updated": max(now, created),
            "status": session_status(session),
            "events": len(session.events),
            "state": session.to_json(),
        }
        fd, tmp = tempfile.mkstemp(dir=self._dir(session.id), suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(envelope, f, ensure_ascii=False, sort_keys=True)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return envelope

    # --- reading ---------------------------------------------------------

    def _read_valid_events(self, path: Path) -> list[dict]:
        if not path.exists():
            return []
        events = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    if _event_crc(record) != record["crc"]:
                        break
                except (ValueError, KeyError, TypeError):
                    break
                events.append(
                    {"seq": record["seq"], "type": record["type"], "data": record["data"]}
                )
        return events

    def _count_valid_lines(self, path: Path) -> int:
        return len(self._read_valid_events(path))

    def exists(self, session_id: str) -> bool:
        return self._log(session_id).exists() or self._snapshot(session_id).exists()

    def load(self, session_id: str) -> workflow.Session:
        """Replay the event log; tolerates a torn or garbled tail."""
        if not self.exists(session_id):
            raise PhaseError(f"unknown session {session_id!r}", code="unknown-session")
        return workflow.replay(self._read_valid_events(self._log(session_id)))

    def envelope(self, session_id: str) -> dict:
        path = self._snapshot(session_id)
        if path.exists():
            try:
                return json.loads(path.read_text(encoding="utf-8"))
            except ValueError:
                pass  # torn snapshot: rebuild from the log below
        session = self.load(session_id)
        return {
            "id": session.id,
            "owner": "local",
            "created": 0.0,
            "updated": 0.0,
            "status": session_status(session),
            "events": len(session.events),
            "state": session.to_json(),
        }

    def list(self) -> list[dict]:
        envelopes = []
        for entry in sorted(self.root.iterdir()):
            if entry.is_dir() and self.exists(entry.name):
                envelopes.append(self.envelope(entry.name))
        envelopes.sort(key=lambda e: (e["created"], e["id"]))
        return envelopes
