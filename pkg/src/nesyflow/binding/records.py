"""Dataset records: one JSON object per line, an ``id`` plus named fields."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import BindingError


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    fields: dict = field(default_factory=dict)


def parse_records(lines) -> list[DatasetRecord]:
    records = []
    seen = set()
    for n, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except ValueError as e:
            raise BindingError(f"line {n}: not valid JSON: {e}", code="bad-record")
        if not isinstance(obj, dict) or "id" not in obj:
            raise BindingError(f"line {n}: record needs an \"id\"", code="bad-record")
        rid = obj["id"]
        if not isinstance(rid, str) or not rid:
            raise BindingError(f"line {n}: id must be a non-empty string", code="bad-record")
        if rid in seen:
            raise BindingError(f"line {n}: duplicate record id {rid!r}", code="bad-record")
        seen.add(rid)
        fields = {k: v for k, v in obj.items() if k != "id"}
        if any(not k for k in fields):
            raise BindingError(f"record {rid!r} has an empty field name", code="bad-record")
        records.append(DatasetRecord(rid, fields))
    return records


def load_records(path) -> list[DatasetRecord]:
    with open(path, encoding="utf-8") as f:
        return parse_records(f)
