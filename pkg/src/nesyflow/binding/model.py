"""Scoring: mock distributions for deterministic runs, or one chat-completion
call per instance against an OpenAI-style endpoint.

Remote answers rarely repeat a label verbatim, so parsing runs in stages:
exact match, case-folded match, then a word-boundary scan over an alias table
(label, label with underscores as spaces, its non-stopword tokens).  The
earliest hit in the answer wins; ties go to the longer alias, then label
order.  Anything still unmatched scores uniform and logs a warning, keeping
batch runs alive.

Endpoint and key come from NESY_MODEL_URL / NESY_MODEL_KEY.
"""

from __future__ import annotations

import logging
import os
import re

import httpx

from ..errors import ModelError
from ..graphlang.ground import Instance, InstanceSet
from ..graphlang.nodes import ConceptGraph
from ..ilp.scores import EPS
from .spec import MOCK, ModelConfig

log = logging.getLogger(__name__)

REQUEST_TIMEOUT = 30.0

# function words that appear inside many label names without meaning anything
STOPWORDS = frozenset(
    "the a an of to and or is are was it in on at be as by for with that this".split()
)


def alias_table(labels) -> list[tuple[str, str]]:
    """(alias, label) pairs in priority order: the full label, its spaced
    form, then its non-stopword tokens of length >= 2."""
    pairs = []
    seen = set()

    def put(alias: str, label: str) -> None:
        alias = alias.casefold()
        if alias and alias not in seen:
            seen.add(alias)
            pairs.append((alias, label))

    for label in labels:
        put(label, label)
        spaced = re.sub(r"[_\W]+", " ", label).strip()
        put(spaced, label)
        for tok in spaced.split():
            if tok not in STOPWORDS and len(tok) >= 2:
                put(tok, label)
    return pairs


def parse_answer(text: str, labels) -> str | None:
    """Map free answer text to a label, or None when nothing matches."""
    stripped = text.strip()
    for label in labels:
        if stripped == label:
            return label
    folded = stripped.casefold()
    for label in labels:
        if folded == label.casefold():
            return label
    hits = []
    for order, (alias, label) in enumerate(alias_table(labels)):
        m = re.search(rf"\b{re.escape(alias)}\b", folded)
        if m:
            hits.append((m.start(), -len(alias), order, label))
    if hits:
        return min(hits)[3]
    return None


def one_hot(labels, chosen: str) -> dict[str, float]:
    n = len(labels)
    return {l: (1.0 - EPS * (n - 1)) if l == chosen else EPS for l in labels}


def uniform(labels) -> dict[str, float]:
    return {l: 1.0 / len(labels) for l in labels}


def _normalize(labels, raw: dict) -> dict[str, float]:
    missing = [l for l in labels if l not in raw]
    if missing:
        raise ModelError(f"mock scores are missing labels {missing}", code="bad-scores")
    vals = {l: max(float(raw[l]), 0.0) for l in labels}
    total = sum(vals.values())
    if total <= 0.0:
        raise ModelError("mock scores sum to zero", code="bad-scores")
    probs = {l: v / total for l, v in vals.items()}
    # lift anything under the floor; the mass comes out of the largest entry
    deficit = 0.0
    for l, p in probs.items():
        if p < EPS:
            deficit += EPS - p
            probs[l] = EPS
    if deficit:
        top = max(labels, key=lambda l: probs[l])
        probs[top] -= deficit
    return probs


def render_prompt(template: str, instance: Instance) -> str:
    try:
        return template.format_map(instance.properties)
    except (KeyError, IndexError) as e:
        raise ModelError(
            f"prompt placeholder {e} does not resolve on {instance.id!r}",
            code="unresolved-placeholder",
        )


def predict(
    config: ModelConfig,
    instance: Instance,
    *,
    client: httpx.Client | None = None,
) -> dict[str, float]:
    """One score row for the config's label set; always a distribution
    summing to 1 with every entry >= EPS."""
    prompt = render_prompt(config.prompt, instance)
    if config.mode == MOCK:
        raw = None
        if config.scores_by_instance is not None:
            raw = config.scores_by_instance.get(instance.id)
        if raw is None:
            raw = config.scores
        if raw is None:
            raise ModelError(
                f"mock model for {config.label_set!r} has no scores for"
                f" {instance.id!r}",
                code="bad-scores",
            )
        return _normalize(config.labels, raw)

    url = os.environ.get("NESY_MODEL_URL")
    if not url:
        raise ModelError("NESY_MODEL_URL is not set", code="model-endpoint")
    headers = {"Content-Type": "application/json"}
    key = os.environ.get("NESY_MODEL_KEY")
    if key:
        headers["Authorization"] = f"Bearer {key}"
    payload = {
        "model": config.model or "default",
        "messages": [{"role": "user", "content": prompt}],
        "temperature": 0,
    }
    try:
        if client is not None:
            resp = client.post(url, json=payload, headers=headers, timeout=REQUEST_TIMEOUT)
        else:
            resp = httpx.post(url, json=payload, headers=headers, timeout=REQUEST_TIMEOUT)
        resp.raise_for_status()
        body = resp.json()
        answer = body["choices"][0]["message"]["content"]
    except httpx.HTTPError as e:
        raise ModelError(f"model request failed: {e}", code="http")
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise ModelError(f"malformed model response: {e}", code="bad-response")

    label = parse_answer(str(answer), config.labels)
    if label is None:
        log.warning(
            "answer %r matched no label of %s; scoring uniform", answer, config.label_set
        )
        return uniform(config.labels)
    return one_hot(config.labels, label)


def score_table_json(
    spec_models,
    instances: InstanceSet,
    graph: ConceptGraph,
    *,
    client: httpx.Client | None = None,
) -> dict:
    """Score every instance under every model binding; returns the
    {instance: {label: prob}} JSON a ScoreTable loads."""
    out: dict = {}
    for config in spec_models:
        ls = next(c for c in graph.label_sets() if c.name == config.label_set)
        for inst in instances.instances_of(ls.parent):
            out.setdefault(inst.id, {}).update(predict(config, inst, client=client))
    return out
