"""The hunt engine: invocation scheduling, step application, replay.

A step is one manifold invocation that changed the state. Invocations
that emit nothing (a case with no novel output, a verifier without the
data it needs) consume their input silently and are never journaled, so
seq always equals the number of journaled records applied.

Scheduling is deterministic: detectors before cases before verifiers
before decision manifolds, registry declaration order within a kind,
input arrival order within a manifold. Case manifolds marked serial
emit one novel hypothesis per step and stay schedulable until they have
nothing new to say.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from . import reasoning
from .deliberation import TargetKind, deliberate
from .detectors import BeaconDetectionParams, detect_beacons, histogram_baseline
from .journal import Deltas, JournalError, JournalWriter, StepKind, StepRecord
from .model import (
    MACHINE,
    Decision,
    EvidenceKind,
    Hypothesis,
    HypKind,
    HypStatus,
    Predicate,
    ProvenanceChain,
    hypothesis_ref,
)
from .state import (
    CaseEntry,
    DetectorEntry,
    HuntConfig,
    HuntState,
    StateError,
    VerifierEntry,
    init_hunt,
)
from .telemetry import ForensicInventory, HttpFlow, SyslogEvent

log = logging.getLogger(__name__)

GATE_REQUIRED = "required"
GATE_AUTO = "auto"
GATE_MANIFOLD = "gate"

# run-loop statuses
RAN = "ran"
QUIESCENT = "quiescent"
AWAITING_ANALYST = "awaiting_analyst"


@dataclass(frozen=True)
class ManifoldInvocation:
    kind: StepKind
    manifold: str
    inputs: tuple[str, ...]


# ---------------------------------------------------------------------------
# builtin manifold implementations, bound into registry entries by the binder


def _beacon_params(entry: DetectorEntry) -> BeaconDetectionParams:
    p = entry.params
    return BeaconDetectionParams(
        bin_width=float(p.get("bin", 300.0)),
        window=float(p.get("window", 604800.0)),
        min_events=int(p.get("min_events", 8)),
        threshold=float(p.get("threshold", 0.6)),
        max_period=float(p.get("max_period", 86400.0)),
    )


def beac_fn(state: HuntState, entry: DetectorEntry, batch) -> list[Hypothesis]:
    return detect_beacons(batch, _beacon_params(entry), source=entry.source)


def histogram_fn(state: HuntState, entry: DetectorEntry, batch) -> list[Hypothesis]:
    return histogram_baseline(
        batch, min_count=int(entry.params.get("min_count", 50)), source=entry.source
    )


def kge_fn(state: HuntState, entry: CaseEntry, hyp: Hypothesis) -> list[Hypothesis]:
    factor = float(entry.params.get("confidence", reasoning.DEFAULT_CONFIDENCE_FACTOR))
    return reasoning.kge_expand(hyp, state.k, confidence_factor=factor)


def impact_fn(state: HuntState, entry: CaseEntry, fact: Predicate) -> list[Hypothesis]:
    conf = float(entry.params.get("confidence", reasoning.DEFAULT_IMPACT_CONFIDENCE))
    return reasoning.impact_assess(fact, state.k, state.telemetry.syslog, confidence=conf)


def analytics_fn(state: HuntState, entry: VerifierEntry, hyp: Hypothesis):
    return reasoning.verify_analytics(hyp, state.k)


def forensics_fn(state: HuntState, entry: VerifierEntry, hyp: Hypothesis):
    return reasoning.verify_forensics(hyp, state.k, state.telemetry.inventories)


BUILTIN_DETECTORS = {"beac": beac_fn, "histogram_baseline": histogram_fn}
# name -> (input predicate, consumes, serial, fn)
BUILTIN_CASES = {
    "kge": ("beacon", "hypothesis", True, kge_fn),
    "impact": ("infected", "fact", False, impact_fn),
}
BUILTIN_VERIFIERS = {"analytics": "cec", "forensics": "infected"}
BUILTIN_VERIFIER_FNS = {"analytics": analytics_fn, "forensics": forensics_fn}
# decision manifolds derived from the action catalog; declaration order matters
BUILTIN_DECISIONS = [("malwareman", "infected"), ("cecman", "cec")]


# ---------------------------------------------------------------------------
# scheduling


def _source_batch(state: HuntState, source: str) -> list:
    if source == "http":
        return state.telemetry.http
    if source == "syslog":
        return state.telemetry.syslog
    raise StateError(f"unknown telemetry source {source!r}")


def pending_work(state: HuntState) -> list[ManifoldInvocation]:
    work: list[ManifoldInvocation] = []
    for d in state.detectors:
        batch = _source_batch(state, d.source)
        if len(batch) > state.telemetry_marks.get(d.name, 0):
            work.append(ManifoldInvocation(StepKind.DETECT, d.name, (d.source,)))
    for c in state.cases:
        if c.consumes == "hypothesis":
            for h in state.pending():
                if h.predicate.name == c.input_pred and (c.name, h.id) not in state.consumed:
                    work.append(ManifoldInvocation(StepKind.CASE, c.name, (h.id,)))
        else:
            for p in state.k.facts:
                key = (c.name, str(p))
                if p.name == c.input_pred and key not in state.consumed:
                    work.append(ManifoldInvocation(StepKind.CASE, c.name, (str(p),)))
    for v in state.verifiers:
        for h in state.pending():
            if (
                h.kind is HypKind.THREAT
                and h.predicate.name == v.input_pred
                and h.verdict_from(v.name) is None
                and (v.name, h.id) not in state.consumed
            ):
                work.append(ManifoldInvocation(StepKind.VERIFY, v.name, (h.id,)))
    for m in state.decisions:
        facts = [
            str(p)
            for p in state.k.facts
            if p.name == m.input_pred and (m.name, str(p)) not in state.consumed
        ]
        if facts:
            work.append(ManifoldInvocation(StepKind.DELIBERATE, m.name, tuple(facts)))
    return work


# ---------------------------------------------------------------------------
# step application


def _fact_by_str(state: HuntState, text: str) -> Predicate:
    for p in state.k.facts:
        if str(p) == text:
            return p
    raise StateError(f"unknown fact {text!r}")


def _admit(state: HuntState, candidates: Iterable[Hypothesis], origin: str) -> list[Hypothesis]:
    """Assign ids to candidates whose predicate is genuinely new."""
    known = state.known_predicates()
    added = []
    for cand in candidates:
        if cand.predicate in known:
            continue
        known.add(cand.predicate)
        cand.id = state.new_hyp_id()
        cand.origin = origin
        state.hypotheses[cand.id] = cand
        added.append(cand)
    return added


def _record(state: HuntState, manifold: str, kind: StepKind, deltas: Deltas,
            actor: str = MACHINE) -> StepRecord:
    rec = StepRecord(seq=state.seq, manifold=manifold, kind=kind, deltas=deltas, actor=actor)
    state.seq += 1
    return rec


def apply_invocation(
    state: HuntState, inv: ManifoldInvocation
) -> tuple[HuntState, Optional[StepRecord]]:
    """Apply one invocation to a copy of the state.

    Returns the new state and the journaled record, or None when the
    invocation emitted nothing and was consumed silently.
    """
    s = state.clone()
    if inv.kind is StepKind.DETECT:
        return _apply_detect(s, inv)
    if inv.kind is StepKind.CASE:
        return _apply_case(s, inv)
    if inv.kind is StepKind.VERIFY:
        return _apply_verify(s, inv)
    if inv.kind is StepKind.DELIBERATE:
        return _apply_deliberate(s, inv)
    raise StateError(f"cannot apply invocation kind {inv.kind}")


def _apply_detect(s: HuntState, inv: ManifoldInvocation):
    d = next(e for e in s.detectors if e.name == inv.manifold)
    batch = _source_batch(s, d.source)
    candidates = d.fn(s, d, batch)
    s.telemetry_marks[d.name] = len(batch)
    added = _admit(s, candidates, d.name)
    if not added:
        return s, None
    deltas = Deltas(hyps_added=[copy.deepcopy(h) for h in added])
    return s, _record(s, d.name, StepKind.DETECT, deltas)


def _apply_case(s: HuntState, inv: ManifoldInvocation):
    c = next(e for e in s.cases if e.name == inv.manifold)
    if c.consumes == "hypothesis":
        hid = inv.inputs[0]
        hyp = s.hypotheses[hid]
        outs = c.fn(s, c, hyp)
        known = s.known_predicates()
        novel = [o for o in outs if o.predicate not in known]
        if not novel:
            s.consumed.add((c.name, hid))
            return s, None
        emit = novel[:1] if c.serial else novel
    else:
        fact = _fact_by_str(s, inv.inputs[0])
        outs = c.fn(s, c, fact)
        known = s.known_predicates()
        emit = [o for o in outs if o.predicate not in known]
        s.consumed.add((c.name, inv.inputs[0]))
        if not emit:
            return s, None
    added = _admit(s, emit, c.name)
    if not added:
        return s, None
    deltas = Deltas(hyps_added=[copy.deepcopy(h) for h in added])
    return s, _record(s, c.name, StepKind.CASE, deltas)


def _apply_verify(s: HuntState, inv: ManifoldInvocation):
    v = next(e for e in s.verifiers if e.name == inv.manifold)
    hid = inv.inputs[0]
    hyp = s.hypotheses[hid]
    verdict = v.fn(s, v, hyp)
    if verdict is None:
        # verification unavailable; the mark is cleared if new data arrives
        s.consumed.add((v.name, hid))
        return s, None
    hyp.verdicts.append(verdict)
    deltas = Deltas(hyps_added=[copy.deepcopy(hyp)])
    return s, _record(s, v.name, StepKind.VERIFY, deltas)


def _apply_deliberate(s: HuntState, inv: ManifoldInvocation):
    m = next(e for e in s.decisions if e.name == inv.manifold)
    facts = [_fact_by_str(s, text) for text in inv.inputs]
    emitted = {
        r.action
        for r in s.recommendations
        if s.catalog.get(r.action).target_kind is not TargetKind.HOST
    }
    existing = {(r.action, tuple(r.targets), str(r.fact)) for r in s.recommendations}
    recs = deliberate(
        facts,
        s.k.internal.assets,
        s.defender,
        s.catalog,
        s.cost_matrix,
        emitted,
        bundle_facts=list(s.k.facts),
        next_id=s.new_rec_id,
        existing_keys=existing,
    )
    for text in inv.inputs:
        s.consumed.add((m.name, text))
    if not recs:
        return s, None
    s.recommendations.extend(recs)
    deltas = Deltas(recommendations_added=[copy.deepcopy(r) for r in recs])
    return s, _record(s, m.name, StepKind.DELIBERATE, deltas)


# ---------------------------------------------------------------------------
# promotion and provenance


def build_chain(state: HuntState, hyp: Hypothesis, _seen: Optional[set] = None) -> ProvenanceChain:
    """Evidence chain for a promoted hypothesis.

    Starts at the hypothesis itself, expands hypothesis-kind evidence
    recursively, and appends the rationale of accepting verdicts, so
    every chain bottoms out in telemetry or intelligence references.
    """
    seen = _seen if _seen is not None else set()
    if hyp.id in seen:
        return []
    seen.add(hyp.id)
    chain: ProvenanceChain = [hypothesis_ref(hyp.id)]
    for ev in hyp.evidence:
        if ev.kind is EvidenceKind.HYPOTHESIS and ev.source in state.hypotheses:
            chain.extend(build_chain(state, state.hypotheses[ev.source], seen))
        else:
            chain.append(ev)
    for verdict in hyp.verdicts:
        if verdict.decision is Decision.ACCEPTED:
            chain.extend(verdict.rationale)
    return chain


def promote(
    state: HuntState,
    hypothesis_id: str,
    decision: Decision,
    actor: str,
    override: bool = False,
) -> tuple[HuntState, StepRecord]:
    """Resolve a pending hypothesis: accept into the fact base or reject.

    Requires a recorded verifier verdict unless override is set, and an
    accept that contradicts a verifier rejection also needs override.
    """
    s = state.clone()
    hyp = s.hypotheses.get(hypothesis_id)
    if hyp is None:
        raise StateError(f"unknown hypothesis {hypothesis_id!r}")
    if hyp.status is not HypStatus.PENDING:
        raise StateError(f"hypothesis {hypothesis_id} is not pending")
    if not hyp.verdicts and not override:
        raise StateError(f"hypothesis {hypothesis_id} has no verifier verdict")
    if decision is Decision.ACCEPTED:
        if not override and any(v.decision is Decision.REJECTED for v in hyp.verdicts):
            raise StateError(
                f"accepting {hypothesis_id} conflicts with a verifier rejection"
            )
        if s.k.has_fact(hyp.predicate):
            raise StateError(f"fact already known: {hyp.predicate}")
        hyp.resolve(HypStatus.ACCEPTED)
        s.k.add_fact(hyp.predicate, build_chain(s, hyp))
        deltas = Deltas(facts_added=[hyp.predicate], hyps_removed=[hypothesis_id])
    else:
        hyp.resolve(HypStatus.REJECTED)
        deltas = Deltas(hyps_removed=[hypothesis_id])
    return s, _record(s, GATE_MANIFOLD, StepKind.PROMOTE, deltas, actor=actor)


def provenance(state: HuntState, fact: Predicate) -> ProvenanceChain:
    if not state.k.has_fact(fact):
        raise StateError(f"unknown fact {fact}")
    return list(state.k.facts[fact])


def dispose_recommendation(
    state: HuntState, rec_id: str, status, actor: str
) -> tuple[HuntState, StepRecord]:
    """Analyst approves or declines a recommendation; journaled as an upsert."""
    s = state.clone()
    rec = s.find_recommendation(rec_id)
    if rec is None:
        raise StateError(f"unknown recommendation {rec_id!r}")
    try:
        rec.dispose(status, actor)
    except ValueError as exc:
        raise StateError(str(exc)) from exc
    deltas = Deltas(recommendations_added=[copy.deepcopy(rec)])
    return s, _record(s, GATE_MANIFOLD, StepKind.DELIBERATE, deltas, actor=actor)


# ---------------------------------------------------------------------------
# run loop


def _gate_blocks(state: HuntState, inv: ManifoldInvocation) -> bool:
    if state.analyst_gate != GATE_REQUIRED:
        return False
    if inv.kind is StepKind.VERIFY:
        return False
    return any(h.verdicts for h in state.pending())


def _awaiting_analyst(state: HuntState) -> bool:
    """Verdict-bearing pending hypotheses keep a gated hunt open."""
    return state.analyst_gate == GATE_REQUIRED and any(
        h.verdicts for h in state.pending()
    )


def _auto_promotion(state: HuntState) -> Optional[tuple[HuntState, StepRecord]]:
    """In auto gate mode, sweep the first verdict-bearing pending hypothesis."""
    if state.analyst_gate != GATE_AUTO:
        return None
    for hyp in state.pending():
        if hyp.verdicts:
            return promote(state, hyp.id, hyp.verdicts[-1].decision, MACHINE)
    return None


def step_once(
    state: HuntState, writer: Optional[JournalWriter] = None
) -> tuple[HuntState, list[StepRecord], str]:
    """Apply the next pending invocation (or auto promotion), if any."""
    swept = _auto_promotion(state)
    if swept is not None:
        state, rec = swept
        if writer is not None:
            writer.append(rec)
        return state, [rec], RAN

    work = pending_work(state)
    if not work:
        return state, [], AWAITING_ANALYST if _awaiting_analyst(state) else QUIESCENT
    inv = work[0]
    if _gate_blocks(state, inv):
        return state, [], AWAITING_ANALYST
    state, rec = apply_invocation(state, inv)
    records = []
    if rec is not None:
        if writer is not None:
            writer.append(rec)
        records.append(rec)
    return state, records, RAN


def run(
    state: HuntState,
    writer: Optional[JournalWriter] = None,
    max_steps: int = 100_000,
) -> tuple[HuntState, list[StepRecord], str]:
    """Advance until quiescent or blocked on the analyst gate."""
    records: list[StepRecord] = []
    for _ in range(max_steps):
        state, recs, status = step_once(state, writer)
        records.extend(recs)
        if status is not RAN:
            return state, records, status
    raise StateError("step budget exhausted; runaway hunt")


def hunt_status(state: HuntState) -> str:
    if _auto_promotion(state) is not None:
        return RAN
    work = pending_work(state)
    if not work:
        return AWAITING_ANALYST if _awaiting_analyst(state) else QUIESCENT
    return AWAITING_ANALYST if _gate_blocks(state, work[0]) else RAN


# ---------------------------------------------------------------------------
# telemetry ingestion


def ingest_telemetry(
    state: HuntState,
    http: Iterable[HttpFlow] = (),
    syslog: Iterable[SyslogEvent] = (),
    inventories: Iterable[ForensicInventory] = (),
) -> None:
    """Feed new telemetry into a live state (mutates in place).

    New inventories reopen verifier inputs that were marked unavailable;
    new peer telemetry reopens fact-consuming cases, since they may now
    see contacts they could not before. Emission dedup keeps the reruns
    idempotent.
    """
    http = list(http)
    syslog = list(syslog)
    inventories = list(inventories)
    state.telemetry.http.extend(http)
    state.telemetry.syslog.extend(syslog)
    for inventory in inventories:
        state.telemetry.inventories[inventory.host] = inventory

    reopened: set[str] = set()
    if inventories:
        reopened |= {v.name for v in state.verifiers}
    if syslog:
        reopened |= {c.name for c in state.cases if c.consumes == "fact"}
    if reopened:
        state.consumed = {key for key in state.consumed if key[0] not in reopened}


# ---------------------------------------------------------------------------
# replay


def _replay_deltas(state: HuntState, rec: StepRecord) -> None:
    d = rec.deltas
    for h in d.hyps_added:
        state.hypotheses[h.id] = copy.deepcopy(h)
    removed: dict[Predicate, Hypothesis] = {}
    for hid in d.hyps_removed:
        hyp = state.hypotheses.get(hid)
        if hyp is None:
            raise JournalError(f"replay: unknown hypothesis {hid!r} at seq {rec.seq}")
        removed[hyp.predicate] = hyp
    for p in d.facts_added:
        hyp = removed.get(p)
        if hyp is None:
            raise JournalError(f"replay: fact {p} has no promoted hypothesis at seq {rec.seq}")
        hyp.resolve(HypStatus.ACCEPTED)
        state.k.add_fact(p, build_chain(state, hyp))
    for hid in d.hyps_removed:
        hyp = state.hypotheses[hid]
        if hyp.status is HypStatus.PENDING:
            hyp.resolve(HypStatus.REJECTED)
    for r in d.recommendations_added:
        current = state.find_recommendation(r.id)
        if current is None:
            state.recommendations.append(copy.deepcopy(r))
        else:
            idx = state.recommendations.index(current)
            state.recommendations[idx] = copy.deepcopy(r)


def replay(records: list[StepRecord], config: HuntConfig) -> HuntState:
    """Fold journal records over a fresh state.

    Replaying a journal yields a state whose fingerprint matches the
    live state that wrote it; timestamps live only in the records.
    """
    state = init_hunt(config)
    for rec in records:
        if rec.seq != state.seq:
            raise JournalError(f"journal gap or duplicate: seq {rec.seq}, expected {state.seq}")
        _replay_deltas(state, rec)
        state.seq += 1
    hyp_ids = [int(h[1:]) for h in state.hypotheses if h[1:].isdigit()]
    rec_ids = [int(r.id[1:]) for r in state.recommendations if r.id[1:].isdigit()]
    state.next_hyp = max(hyp_ids, default=0) + 1
    state.next_rec = max(rec_ids, default=0) + 1
    return state
