"""The hunt state tuple and everything it carries.

A hunt session owns exactly one HuntState. The state bundles the knowledge
base (asset inventory, intelligence, promoted facts), the hypothesis set,
the four manifold registries, the action catalog, and the recommendation
list, plus a step counter that equals the number of journaled records.

States are value-like: the engine copies before applying a step, and
semantic equality is defined by fingerprint() over the replayable fields
(telemetry stores, inventories and consumed-input bookkeeping are session
plumbing, not state identity).
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .deliberation import ActionCatalog, AssetProfile, CostMatrix, DefenderProfile
from .model import ActionRecommendation, Hypothesis, HypStatus, Predicate, ProvenanceChain
from .telemetry import ForensicInventory, HttpFlow, SyslogEvent


class StateError(ValueError):
    """Violation of a hunt-state contract."""


@dataclass
class IntelStore:
    """Local intelligence: control-host indicators and malware hash entries."""

    cc_hosts: set[str] = field(default_factory=set)
    malware: dict[str, str] = field(default_factory=dict)  # name -> sha256

    def __post_init__(self) -> None:
        for name, digest in self.malware.items():
            if len(digest) != 64 or any(c not in "0123456789abcdef" for c in digest):
                raise StateError(f"malware {name}: sha256 must be 64 lowercase hex chars")

    def lookup(self, indicator: str) -> list[tuple[str, str]]:
        """Exact-match lookup; returns (kind, entry) pairs."""
        matches = []
        if indicator in self.cc_hosts:
            matches.append(("cc", indicator))
        for name, digest in self.malware.items():
            if indicator == digest or indicator == name:
                matches.append(("malware", name))
        return matches


@dataclass
class InternalKnowledge:
    """What the defender knows about their own estate."""

    assets: dict[str, AssetProfile] = field(default_factory=dict)
    monitoring: list[str] = field(default_factory=list)


@dataclass
class KnowledgeBase:
    internal: InternalKnowledge = field(default_factory=InternalKnowledge)
    intelligence: IntelStore = field(default_factory=IntelStore)
    # insertion-ordered: facts only grow during a hunt
    facts: dict[Predicate, ProvenanceChain] = field(default_factory=dict)

    def has_fact(self, p: Predicate) -> bool:
        return p in self.facts

    def add_fact(self, p: Predicate, chain: ProvenanceChain) -> None:
        if p in self.facts:
            raise StateError(f"fact already known: {p}")
        self.facts[p] = chain


# ---------------------------------------------------------------------------
# Registries. Entries carry the bound callable plus whatever routing data
# pending_work needs; the callables themselves come from the builtin table
# wired up by the DSL binder.


@dataclass
class DetectorEntry:
    name: str
    source: str                       # telemetry source it consumes
    params: dict[str, float]
    fn: Callable[..., list[Hypothesis]]


@dataclass
class CaseEntry:
    name: str
    input_pred: str                   # predicate name it subscribes to
    consumes: str                     # "hypothesis" or "fact"
    serial: bool                      # one emission per step vs whole batch
    params: dict[str, float]
    fn: Callable[..., list[Hypothesis]]


@dataclass
class VerifierEntry:
    name: str
    input_pred: str
    fn: Callable[..., Any]            # returns a Verdict or None


@dataclass
class DecisionEntry:
    name: str
    input_pred: str


def _unique_names(entries, what: str) -> None:
    names = [e.name for e in entries]
    if len(names) != len(set(names)):
        raise StateError(f"duplicate {what} name")


@dataclass
class HuntConfig:
    """Fully bound configuration consumed by init_hunt."""

    name: str
    intel: IntelStore
    assets: dict[str, AssetProfile]
    monitoring: list[str]
    detectors: list[DetectorEntry]
    cases: list[CaseEntry]
    verifiers: list[VerifierEntry]
    decisions: list[DecisionEntry]
    catalog: ActionCatalog
    cost_matrix: CostMatrix
    defender: DefenderProfile
    analyst_gate: str = "required"    # or "auto"


@dataclass
class TelemetryBatches:
    """Raw records available to the hunt, in arrival order."""

    http: list[HttpFlow] = field(default_factory=list)
    syslog: list[SyslogEvent] = field(default_factory=list)
    inventories: dict[str, ForensicInventory] = field(default_factory=dict)


@dataclass
class HuntState:
    seq: int
    k: KnowledgeBase
    hypotheses: dict[str, Hypothesis]          # all, any status, by id
    detectors: list[DetectorEntry]
    cases: list[CaseEntry]
    decisions: list[DecisionEntry]
    verifiers: list[VerifierEntry]
    catalog: ActionCatalog
    cost_matrix: CostMatrix
    defender: DefenderProfile
    recommendations: list[ActionRecommendation]
    analyst_gate: str
    telemetry: TelemetryBatches = field(default_factory=TelemetryBatches)
    # session plumbing below: not part of semantic identity
    next_hyp: int = 1
    next_rec: int = 1
    consumed: set[tuple[str, str]] = field(default_factory=set)
    telemetry_marks: dict[str, int] = field(default_factory=dict)

    def pending(self) -> list[Hypothesis]:
        return [h for h in self.hypotheses.values() if h.status is HypStatus.PENDING]

    def pending_predicates(self) -> set[Predicate]:
        return {h.predicate for h in self.pending()}

    def known_predicates(self) -> set[Predicate]:
        """Every predicate that exists anywhere: pending, archived, or fact."""
        return {h.predicate for h in self.hypotheses.values()} | set(self.k.facts)

    def new_hyp_id(self) -> str:
        hid = f"h{self.next_hyp}"
        self.next_hyp += 1
        return hid

    def new_rec_id(self) -> str:
        rid = f"r{self.next_rec}"
        self.next_rec += 1
        return rid

    def clone(self) -> "HuntState":
        """Value copy; registries and config objects are shared (immutable)."""
        return HuntState(
            seq=self.seq,
            k=KnowledgeBase(
                internal=self.k.internal,
                intelligence=self.k.intelligence,
                facts={p: list(chain) for p, chain in self.k.facts.items()},
            ),
            hypotheses={hid: copy.deepcopy(h) for hid, h in self.hypotheses.items()},
            detectors=self.detectors,
            cases=self.cases,
            decisions=self.decisions,
            verifiers=self.verifiers,
            catalog=self.catalog,
            cost_matrix=self.cost_matrix,
            defender=self.defender,
            recommendations=[copy.deepcopy(r) for r in self.recommendations],
            analyst_gate=self.analyst_gate,
            telemetry=self.telemetry,
            next_hyp=self.next_hyp,
            next_rec=self.next_rec,
            consumed=set(self.consumed),
            telemetry_marks=dict(self.telemetry_marks),
        )

    def semantic_view(self) -> dict[str, Any]:
        """The replayable identity of this state."""
        return {
            "seq": self.seq,
            "facts": [
                {"predicate": p.to_dict(), "provenance": [e.to_dict() for e in chain]}
                for p, chain in self.k.facts.items()
            ],
            "hypotheses": [
                self.hypotheses[hid].to_dict() for hid in sorted(self.hypotheses)
            ],
            "recommendations": [r.to_dict() for r in self.recommendations],
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.semantic_view(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def find_recommendation(self, rid: str) -> Optional[ActionRecommendation]:
        for r in self.recommendations:
            if r.id == rid:
                return r
        return None


def init_hunt(config: HuntConfig) -> HuntState:
    """Build the initial state: empty hypotheses and facts, populated registries."""
    _unique_names(config.detectors, "detector")
    _unique_names(config.cases, "case manifold")
    _unique_names(config.verifiers, "verifier")
    _unique_names(config.decisions, "decision manifold")
    declared = {"beacon", "cec", "infected"}
    for entry in [*config.cases, *config.verifiers, *config.decisions]:
        if entry.input_pred not in declared:
            raise StateError(
                f"{entry.name}: undeclared predicate {entry.input_pred!r}"
            )
    return HuntState(
        seq=0,
        k=KnowledgeBase(
            internal=InternalKnowledge(
                assets=dict(config.assets), monitoring=list(config.monitoring)
            ),
            intelligence=config.intel,
        ),
        hypotheses={},
        detectors=list(config.detectors),
        cases=list(config.cases),
        decisions=list(config.decisions),
        verifiers=list(config.verifiers),
        catalog=config.catalog,
        cost_matrix=config.cost_matrix,
        defender=config.defender,
        recommendations=[],
        analyst_gate=config.analyst_gate,
    )
