"""Core domain objects shared across the engine.

Everything the journal serializes lives here: predicates (the currency of
hypotheses and knowledge), hypotheses with their lifecycle, verifier
verdicts, evidence references, and action recommendations. All objects are
plain dataclasses with dict round-trips so journal lines stay diffable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union

Term = Union[str, int, float]

MACHINE = "machine"


def analyst(analyst_id: str) -> str:
    """Actor tag for a human decision, e.g. ``analyst:alice``."""
    return f"analyst:{analyst_id}"


@dataclass(frozen=True)
class Predicate:
    """A ground logical atom such as beacon(host, client).

    Equality is structural (name plus all arguments); the engine relies on
    that to deduplicate hypotheses and to promote facts.
    """

    name: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        return f"{self.name}({', '.join(str(a) for a in self.args)})"

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "args": list(self.args)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Predicate":
        return cls(name=d["name"], args=tuple(d["args"]))


def pred(name: str, *args: Term) -> Predicate:
    return Predicate(name, tuple(args))


class EvidenceKind(str, Enum):
    TELEMETRY = "telemetry"
    INTEL = "intel"
    HYPOTHESIS = "hypothesis"


@dataclass(frozen=True)
class EvidenceRef:
    """One link in a provenance chain.

    kind=telemetry points at a record offset within a named source,
    kind=intel at an intelligence entry, kind=hypothesis at another
    hypothesis (whose own evidence continues the chain).
    """

    kind: EvidenceKind
    source: str
    offset: Optional[int] = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value, "source": self.source}
        if self.offset is not None:
            d["offset"] = self.offset
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvidenceRef":
        return cls(EvidenceKind(d["kind"]), d["source"], d.get("offset"))


def telemetry_ref(source: str, offset: int) -> EvidenceRef:
    return EvidenceRef(EvidenceKind.TELEMETRY, source, offset)


def intel_ref(entry: str) -> EvidenceRef:
    return EvidenceRef(EvidenceKind.INTEL, entry)


def hypothesis_ref(hypothesis_id: str) -> EvidenceRef:
    return EvidenceRef(EvidenceKind.HYPOTHESIS, hypothesis_id)


ProvenanceChain = list[EvidenceRef]


class HypKind(str, Enum):
    DETECTION = "detection"
    THREAT = "threat"


class HypStatus(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class Decision(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass
class Verdict:
    """A verifier's judgement on one hypothesis.

    rationale must be non-empty for accepted verdicts: an acceptance always
    cites the evidence that carried it.
    """

    hypothesis_id: str
    decision: Decision
    verifier: str
    rationale: list[EvidenceRef] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.decision is Decision.ACCEPTED and not self.rationale:
            raise ValueError("accepted verdict requires a rationale")

    def to_dict(self) -> dict[str, Any]:
        return {
            "hypothesis_id": self.hypothesis_id,
            "decision": self.decision.value,
            "verifier": self.verifier,
            "rationale": [r.to_dict() for r in self.rationale],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Verdict":
        return cls(
            hypothesis_id=d["hypothesis_id"],
            decision=Decision(d["decision"]),
            verifier=d["verifier"],
            rationale=[EvidenceRef.from_dict(r) for r in d.get("rationale", [])],
        )


@dataclass
class Hypothesis:
    """A proposition under investigation.

    Detection hypotheses come straight from telemetry and must carry
    evidence; threat hypotheses are produced by case manifolds from other
    hypotheses plus knowledge. Status only moves pending -> accepted or
    pending -> rejected.
    """

    id: str
    kind: HypKind
    predicate: Predicate
    confidence: float
    evidence: list[EvidenceRef]
    origin: str
    status: HypStatus = HypStatus.PENDING
    verdicts: list[Verdict] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.kind is HypKind.DETECTION and not self.evidence:
            raise ValueError("detection hypothesis requires evidence")

    def verdict_from(self, verifier: str) -> Optional[Verdict]:
        for v in self.verdicts:
            if v.verifier == verifier:
                return v
        return None

    def resolve(self, status: HypStatus) -> None:
        if self.status is not HypStatus.PENDING:
            raise ValueError(f"hypothesis {self.id} is not pending")
        if status is HypStatus.PENDING:
            raise ValueError("cannot resolve to pending")
        self.status = status

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "predicate": self.predicate.to_dict(),
            "confidence": self.confidence,
            "evidence": [e.to_dict() for e in self.evidence],
            "origin": self.origin,
            "status": self.status.value,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Hypothesis":
        return cls(
            id=d["id"],
            kind=HypKind(d["kind"]),
            predicate=Predicate.from_dict(d["predicate"]),
            confidence=d["confidence"],
            evidence=[EvidenceRef.from_dict(e) for e in d["evidence"]],
            origin=d["origin"],
            status=HypStatus(d["status"]),
            verdicts=[Verdict.from_dict(v) for v in d.get("verdicts", [])],
        )


class RecStatus(str, Enum):
    RECOMMENDED = "recommended"
    APPROVED = "approved"
    DECLINED = "declined"


@dataclass
class ActionRecommendation:
    """A prescribed protective action awaiting analyst disposition.

    Recommendations are advisory: nothing in the engine executes them.
    cost_vector maps criterion labels (C1..C6) to categorical levels so the
    console can render the deliberation basis alongside the action.
    """

    id: str
    action: str
    targets: list[str]
    fact: Predicate
    cost_vector: dict[str, str]
    rule: str
    status: RecStatus = RecStatus.RECOMMENDED
    disposed_by: Optional[str] = None

    def dispose(self, status: RecStatus, actor_id: str) -> None:
        if self.status is not RecStatus.RECOMMENDED:
            raise ValueError(f"recommendation {self.id} already disposed")
        if status is RecStatus.RECOMMENDED:
            raise ValueError("disposition must approve or decline")
        self.status = status
        self.disposed_by = actor_id

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "action": self.action,
            "targets": list(self.targets),
            "fact": self.fact.to_dict(),
            "cost_vector": dict(self.cost_vector),
            "rule": self.rule,
            "status": self.status.value,
        }
        if self.disposed_by is not None:
            d["disposed_by"] = self.disposed_by
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ActionRecommendation":
        return cls(
            id=d["id"],
            action=d["action"],
            targets=list(d["targets"]),
            fact=Predicate.from_dict(d["fact"]),
            cost_vector=dict(d["cost_vector"]),
            rule=d["rule"],
            status=RecStatus(d["status"]),
            disposed_by=d.get("disposed_by"),
        )
