"""Example store with TF-IDF retrieval over task descriptions.

Entries persist as one JSON file per example so the seed corpus can be read
and edited by hand.  Retrieval is cosine similarity over lowercase unigrams
and bigrams.  The IDF weight is 1/(1+ln(df)), which depends only on how many
base entries contain a term, never on corpus size; an entry sharing no terms
with the others therefore cannot disturb their pairwise similarities.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import RagError
from .graphlang import parse

_ID_RE = re.compile(r"^[\w-]+$")


@dataclass
class ExampleEntry:
    id: str
    description: str
    graph_source: str
    binding_spec: dict = field(default_factory=dict)
    prompt_snippets: str = ""

    @staticmethod
    def from_json(data: dict) -> "ExampleEntry":
        try:
            return ExampleEntry(
                id=data["id"],
                description=data["description"],
                graph_source=data["graph_source"],
                binding_spec=data.get("binding_spec", {}),
                prompt_snippets=data.get("prompt_snippets", ""),
            )
        except KeyError as e:
            raise RagError(f"example entry is missing {e}", code="bad-entry")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "description": self.description,
            "graph_source": self.graph_source,
            "binding_spec": self.binding_spec,
            "prompt_snippets": self.prompt_snippets,
        }


def tokenize(text: str) -> list[str]:
    words = re.findall(r"\w+", text.lower())
    return words + [f"{a} {b}" for a, b in zip(words, words[1:])]


def _weigh(counts: dict[str, int], df: dict[str, int]) -> dict[str, float]:
    return {
        t: n / (1.0 + math.log(max(df.get(t, 1), 1)))
        for t, n in counts.items()
    }


def _counts(text: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for t in tokenize(text):
        counts[t] = counts.get(t, 0) + 1
    return counts


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if not a or not b:
        return 0.0
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


class ExampleStore:
    """In-memory unless given a directory, in which case entries load from
    and persist to `<root>/<id>.json`."""

    def __init__(self, root: str | Path | None = None):
        self._entries: dict[str, ExampleEntry] = {}
        self.root = Path(root) if root is not None else None
        if self.root is not None and self.root.exists():
            for path in sorted(self.root.glob("*.json")):
                entry = ExampleEntry.from_json(json.loads(path.read_text(encoding="utf-8")))
                if entry.id in self._entries:
                    raise RagError(f"duplicate example id {entry.id!r}", code="duplicate-example")
                self._entries[entry.id] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def ids(self) -> list[str]:
        return list(self._entries)

    def get(self, id: str) -> ExampleEntry:
        if id not in self._entries:
            raise RagError(f"no example {id!r}", code="unknown-example")
        return self._entries[id]

    @property
    def entries(self) -> list[ExampleEntry]:
        return list(self._entries.values())

    def add(self, entry: ExampleEntry) -> str:
        if not _ID_RE.match(entry.id):
            raise RagError(f"example id {entry.id!r} is not a slug", code="bad-entry")
        if entry.id in self._entries:
            raise RagError(f"duplicate example id {entry.id!r}", code="duplicate-example")
        result = parse(entry.graph_source)
        if not result.ok:
            first = result.errors()[0]
            raise RagError(
                f"example {entry.id!r} graph does not parse: {first.message}",
                code="bad-entry",
            )
        self._entries[entry.id] = entry
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            path = self.root / f"{entry.id}.json"
            path.write_text(
                json.dumps(entry.to_json(), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
        return entry.id

    def retrieve(
        self, query: str, k: int = 5, exclude=()
    ) -> list[tuple[ExampleEntry, float]]:
        """The k most similar entries by description, leaving out `exclude`."""
        if k < 1:
            raise RagError("k must be at least 1", code="bad-query")
        base = [e for e in self._entries.values() if e.id not in set(exclude)]
        if not base:
            return []
        df: dict[str, int] = {}
        base_counts = []
        for e in base:
            counts = _counts(e.description)
            base_counts.append(counts)
            for t in counts:
                df[t] = df.get(t, 0) + 1
        qvec = _weigh(_counts(query), df)
        scored = [
            (e, _cosine(qvec, _weigh(counts, df)))
            for e, counts in zip(base, base_counts)
        ]
        scored.sort(key=lambda pair: (-pair[1], pair[0].id))
        return scored[:k]

    def similarity(self, id_a: str, id_b: str) -> float:
        """Description similarity between two stored entries, using the full
        corpus document frequencies."""
        df: dict[str, int] = {}
        for e in self._entries.values():
            for t in _counts(e.description):
                df[t] = df.get(t, 0) + 1
        va = _weigh(_counts(self.get(id_a).description), df)
        vb = _weigh(_counts(self.get(id_b).description), df)
        return _cosine(va, vb)
