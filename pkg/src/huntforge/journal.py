"""Append-only hunt journal: NDJSON, one step record per line.

Field names on the wire are exactly seq, ts, manifold, kind, deltas, actor.
The deltas object carries facts_added, hyps_added, hyps_removed and
recommendations_added; absent keys mean empty. hyps_added and
recommendations_added are snapshots with upsert-by-id semantics, which is
how verdicts and dispositions ride the journal without extra delta kinds.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterator, Optional, TextIO

from .model import ActionRecommendation, Hypothesis, Predicate


class JournalError(ValueError):
    """Corrupt or inconsistent journal input."""


class StepKind(str, Enum):
    DETECT = "detect"
    CASE = "case"
    VERIFY = "verify"
    DELIBERATE = "deliberate"
    PROMOTE = "promote"


@dataclass
class Deltas:
    facts_added: list[Predicate] = field(default_factory=list)
    hyps_added: list[Hypothesis] = field(default_factory=list)
    hyps_removed: list[str] = field(default_factory=list)
    recommendations_added: list[ActionRecommendation] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (
            self.facts_added
            or self.hyps_added
            or self.hyps_removed
            or self.recommendations_added
        )

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {}
        if self.facts_added:
            d["facts_added"] = [p.to_dict() for p in self.facts_added]
        if self.hyps_added:
            d["hyps_added"] = [h.to_dict() for h in self.hyps_added]
        if self.hyps_removed:
            d["hyps_removed"] = list(self.hyps_removed)
        if self.recommendations_added:
            d["recommendations_added"] = [r.to_dict() for r in self.recommendations_added]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Deltas":
        return cls(
            facts_added=[Predicate.from_dict(p) for p in d.get("facts_added", [])],
            hyps_added=[Hypothesis.from_dict(h) for h in d.get("hyps_added", [])],
            hyps_removed=list(d.get("hyps_removed", [])),
            recommendations_added=[
                ActionRecommendation.from_dict(r)
                for r in d.get("recommendations_added", [])
            ],
        )


def _now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class StepRecord:
    seq: int
    manifold: str
    kind: StepKind
    deltas: Deltas
    actor: str
    ts: str = field(default_factory=_now_rfc3339)

    def __post_init__(self) -> None:
        if self.deltas.is_empty():
            raise JournalError("empty steps are not journaled")

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "ts": self.ts,
            "manifold": self.manifold,
            "kind": self.kind.value,
            "deltas": self.deltas.to_dict(),
            "actor": self.actor,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StepRecord":
        return cls(
            seq=int(d["seq"]),
            manifold=d["manifold"],
            kind=StepKind(d["kind"]),
            deltas=Deltas.from_dict(d["deltas"]),
            actor=d["actor"],
            ts=d["ts"],
        )

    @classmethod
    def from_json_line(cls, line: str) -> "StepRecord":
        try:
            return cls.from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise JournalError(f"bad journal line: {exc}") from exc


class JournalWriter:
    """Appends records to an NDJSON file, flushing through to disk."""

    def __init__(self, path: str):
        self.path = path
        self._fh: Optional[TextIO] = None

    def _handle(self) -> TextIO:
        if self._fh is None:
            self._fh = open(self.path, "a", encoding="utf-8")
        return self._fh

    def append(self, record: StepRecord) -> None:
        fh = self._handle()
        fh.write(record.to_json_line() + "\n")
        fh.flush()
        os.fsync(fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_journal(path: str) -> list[StepRecord]:
    with open(path, encoding="utf-8") as fh:
        return list(iter_records(fh))


def iter_records(lines) -> Iterator[StepRecord]:
    for line in lines:
        line = line.strip()
        if line:
            yield StepRecord.from_json_line(line)


def check_contiguous(records: list[StepRecord]) -> None:
    """Journal seq numbers must be 0-gap ascending from 0."""
    for i, rec in enumerate(records):
        if rec.seq != i:
            raise JournalError(f"journal gap or duplicate at seq {rec.seq} (expected {i})")
