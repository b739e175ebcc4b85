"""Probability tables feeding the ILP objective.

A ScoreTable maps (instance id, label) to a probability.  Construction
floors every probability at EPS (so logs stay finite) and checks that each
(instance, label-set) row sums to 1 within SUM_TOL before flooring.
"""

from __future__ import annotations

import math

from ..errors import CompileError
from ..graphlang import ConceptGraph, InstanceSet

EPS = 1e-9
SUM_TOL = 1e-6


class ScoreTable:
    def __init__(self, entries: dict[tuple[str, str], float]):
        self.entries = dict(entries)

    def prob(self, instance: str, label: str) -> float:
        try:
            return self.entries[(instance, label)]
        except KeyError:
            raise CompileError(
                f"no score for instance {instance!r} label {label!r}",
                code="missing-score",
            ) from None

    def logp(self, instance: str, label: str) -> float:
        return math.log(self.prob(instance, label))

    @classmethod
    def from_json(
        cls, data: dict, graph: ConceptGraph, instances: InstanceSet
    ) -> "ScoreTable":
        """Build from {instance_id: {label: prob}} JSON.

        Label names are resolved against the instance's concept, so one flat
        row may cover several label-sets (the per-set sum rule still applies
        to each set separately).
        """
        entries: dict[tuple[str, str], float] = {}
        for inst_id, row in data.items():
            if inst_id not in instances:
                raise CompileError(
                    f"scores reference unknown instance {inst_id!r}",
                    code="missing-score",
                )
            concept = instances.get(inst_id).concept
            label_sets = graph.label_sets_of(concept)
            known = {lbl for ls in label_sets for lbl in ls.labels}
            for label, p in row.items():
                if label not in known:
                    raise CompileError(
                        f"instance {inst_id!r} scored on unknown label {label!r}",
                        code="missing-score",
                    )
                if not (isinstance(p, (int, float)) and math.isfinite(p)) or p < 0:
                    raise CompileError(
                        f"bad probability {p!r} for ({inst_id!r}, {label!r})"
                    )
            for ls in label_sets:
                present = [lbl for lbl in ls.labels if lbl in row]
                if not present:
                    continue  # this label-set may be scored elsewhere
                if len(present) != len(ls.labels):
                    missing = set(ls.labels) - set(present)
                    raise CompileError(
                        f"instance {inst_id!r} is missing scores for"
                        f" {sorted(missing)} of label-set {ls.name!r}",
                        code="missing-score",
                    )
                total = math.fsum(row[lbl] for lbl in ls.labels)
                if abs(total - 1.0) > SUM_TOL:
                    raise CompileError(
                        f"scores for ({inst_id!r}, {ls.name!r}) sum to {total},"
                        " expected 1"
                    )
                for lbl in ls.labels:
                    entries[(inst_id, lbl)] = max(row[lbl], EPS)
        return cls(entries)

    def to_json(self, instances: InstanceSet) -> dict:
        out: dict[str, dict[str, float]] = {}
        for (inst, label), p in self.entries.items():
            out.setdefault(inst, {})[label] = p
        return out
