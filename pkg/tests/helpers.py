"""Shared test utilities: golden-run drivers, a small fast hunt for the
randomized property suites, and the seeded case bank those suites check.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from huntforge.deliberation import (
    ALL_CRITERIA,
    DEFAULT_COSTS,
    DEFAULT_PRIORITY,
    Side,
    criterion_side,
    load_cost_matrix,
    rank,
)
from huntforge.dsl import fixture_path, load_hunt_text
from huntforge.dsl.formatter import format_hunt
from huntforge.dsl.lexer import KEYWORDS
from huntforge.dsl.parser import (
    ActionDecl,
    AssetProfileDecl,
    CaseDecl,
    CostRow,
    CostsDecl,
    DefenderProfileDecl,
    DetectorDecl,
    GoalDecl,
    HuntSpecAst,
    IntelDecl,
    NameRange,
    PredPattern,
    TelemetryDecl,
    VerifierDecl,
    parse_hunt,
)
from huntforge.engine import (
    AWAITING_ANALYST,
    QUIESCENT,
    RAN,
    dispose_recommendation,
    ingest_telemetry,
    promote,
    replay,
    run,
    step_once,
)
from huntforge.journal import StepKind, StepRecord
from huntforge.model import Decision, EvidenceKind, RecStatus, analyst
from huntforge.state import HuntConfig, HuntState, init_hunt
from huntforge.telemetry import ScenarioCorpus, ScenarioParams, generate_scenario

GOLDEN_SEED = 42
GOLDEN_FINGERPRINT = (
    "319636c692c4458c639719b8204c67509b92b9747af11c92c09bb1b77dc2b9ed"
)
GOLDEN_FACTS = {
    "cec(203.0.113.7)",
    "infected(client1, zeus)",
    "infected(client2, zeus)",
}
GOLDEN_RECS = {
    ("CONTAIN", ("client1",)),
    ("QUARANTINE", ("client2",)),
    ("FORTIFY", tuple(f"decoy{i}" for i in range(1, 26))),
    (
        "SHARE",
        (
            "cec(203.0.113.7)",
            "infected(client1, zeus)",
            "infected(client2, zeus)",
        ),
    ),
}


def fixture_text() -> str:
    with open(fixture_path(), encoding="utf-8") as fh:
        return fh.read()


def golden_config(gate: str = "auto") -> HuntConfig:
    return load_hunt_text(fixture_text(), analyst_gate=gate)


@lru_cache(maxsize=8)
def load_corpus(seed: int) -> ScenarioCorpus:
    return generate_scenario(seed)


def run_to_quiescence(
    config: HuntConfig, corpus: ScenarioCorpus, writer=None
) -> tuple[HuntState, list[StepRecord], str]:
    state = init_hunt(config)
    ingest_telemetry(state, corpus.http, corpus.syslog, corpus.forensics)
    return run(state, writer)


def scripted_gate_run(
    config: HuntConfig,
    corpus: ScenarioCorpus,
    analyst_id: str = "rho",
    writer=None,
) -> tuple[HuntState, list[StepRecord], list[list[str]]]:
    """Drive a gated hunt with an analyst that follows every verdict.

    Returns the final state, all journal records, and the hypothesis ids
    that were ready (pending with a verdict) at each halt.
    """
    state = init_hunt(config)
    ingest_telemetry(state, corpus.http, corpus.syslog, corpus.forensics)
    records: list[StepRecord] = []
    halts: list[list[str]] = []
    while True:
        state, recs, status = run(state, writer)
        records.extend(recs)
        if status == QUIESCENT:
            return state, records, halts
        assert status == AWAITING_ANALYST, status
        ready = [h for h in state.pending() if h.verdicts]
        assert ready, "halted without a verdict-bearing pending hypothesis"
        halts.append([h.id for h in ready])
        hyp = ready[0]
        state, rec = promote(
            state, hyp.id, hyp.verdicts[-1].decision, analyst(analyst_id)
        )
        if writer is not None:
            writer.append(rec)
        records.append(rec)


# ---------------------------------------------------------------------------
# Mini hunt: same shape as the reference hunt but a 2-day window over four
# clients, so a full engine run costs milliseconds instead of tens of them.

MINI_HUNT = """\
hunt "mini-campaign" {
  intel {
    cc ["203.0.113.7"]
    malware [("zeus", "014e7dc6486c479e84c94efce4bea7169ef7d4c80b6da07d35d393fc71587bbb")]
  }
  telemetry { http, syslog }
  detector beac on http {
    threshold 0.6
    min_events 8
    bin 300
    window 172800
    max_period 43200
  }
  case kge when beacon(remote, client) {
    hypothesize cec(remote) and infected(client, malware)
    confidence 0.5
  }
  case impact when infected(client, malware) {
    hypothesize infected(peer, malware)
    confidence 0.5
  }
  verifier analytics on cec using intel
  verifier forensics on infected using inventories
  action QUARANTINE targets host when crown_jewel
  action CONTAIN targets host when no_downtime
  action MISDIRECT targets decoy_set when resource_constrained
  action FORTIFY targets decoy_set when risk_averse
  action SHARE targets intel_bundle when inform_partners
  costs {
    QUARANTINE: C1 high C2 low C3 low C4 moderate C5 low C6 low
    CONTAIN: C1 low C2 low C3 moderate C4 moderate C5 moderate C6 moderate
    MISDIRECT: C1 low C2 low C3 low C4 high C5 low C6 high
    FORTIFY: C1 low C2 high C3 low C4 low C5 moderate C6 moderate
    SHARE: C1 low C2 moderate C3 low C4 low C5 moderate C6 low
  }
  profile asset client1 { critical, downtime none }
  profile asset client2 { crown_jewel, downtime low }
  profile asset client3..client4
  profile defender { risk_averse, fortify decoy1..decoy5 }
  goal inform_partners
}
"""


def mini_config(gate: str = "auto") -> HuntConfig:
    return load_hunt_text(MINI_HUNT, analyst_gate=gate)


def mini_scenario_params() -> ScenarioParams:
    return ScenarioParams(
        clients=4,
        window=172800.0,
        background_events=20,
        benign_hosts=2,
        lateral_targets=("client2", "client4"),
    )


@lru_cache(maxsize=256)
def mini_corpus(seed: int) -> ScenarioCorpus:
    return generate_scenario(seed, mini_scenario_params())


# ---------------------------------------------------------------------------
# Randomized case bank shared by the engine property suites. Each case runs
# the mini hunt with a seeded random gate mode, analyst script, telemetry
# split, and dispositions, recording a snapshot after every applied step.


@dataclass
class CaseTrace:
    seed: int
    gate: str
    corpus_seed: int
    snapshots: list[tuple[frozenset, frozenset]] = field(default_factory=list)
    records: list[StepRecord] = field(default_factory=list)
    state: Optional[HuntState] = None


def _snapshot(trace: CaseTrace, state: HuntState) -> None:
    trace.snapshots.append(
        (
            frozenset(str(p) for p in state.k.facts),
            frozenset(str(h.predicate) for h in state.pending()),
        )
    )


def build_case(case_seed: int) -> CaseTrace:
    rng = random.Random(9000 + case_seed)
    corpus_seed = rng.randrange(200)
    gate = rng.choice(("auto", "required"))
    corpus = mini_corpus(corpus_seed)
    trace = CaseTrace(seed=case_seed, gate=gate, corpus_seed=corpus_seed)

    state = init_hunt(mini_config(gate))
    split = rng.random() < 0.3
    held_syslog = list(corpus.syslog[len(corpus.syslog) // 2 :]) if split else []
    first_syslog = corpus.syslog[: len(corpus.syslog) // 2] if split else corpus.syslog
    ingest_telemetry(state, corpus.http, first_syslog, corpus.forensics)
    _snapshot(trace, state)

    for _ in range(10_000):
        state, recs, status = step_once(state)
        trace.records.extend(recs)
        if recs:
            _snapshot(trace, state)
        if status == RAN:
            continue
        if held_syslog:
            ingest_telemetry(state, syslog=held_syslog)
            held_syslog = []
            continue
        if status == AWAITING_ANALYST:
            ready = [h for h in state.pending() if h.verdicts]
            assert ready, "gate halt without verdict-bearing pending hypothesis"
            hyp = rng.choice(ready)
            roll = rng.random()
            if roll < 0.7:
                decision = hyp.verdicts[-1].decision
                override = False
            elif roll < 0.85:
                decision = Decision.ACCEPTED
                override = True
            else:
                decision = Decision.REJECTED
                override = True
            state, rec = promote(
                state, hyp.id, decision, analyst("sim"), override=override
            )
            trace.records.append(rec)
            _snapshot(trace, state)
            continue
        assert status == QUIESCENT
        leftovers = state.pending()
        if leftovers and rng.random() < 0.25:
            hyp = rng.choice(leftovers)
            decision = rng.choice((Decision.ACCEPTED, Decision.REJECTED))
            state, rec = promote(
                state, hyp.id, decision, analyst("sim"), override=True
            )
            trace.records.append(rec)
            _snapshot(trace, state)
            continue
        break
    else:
        raise AssertionError("mini hunt did not converge")

    for rec_obj in list(state.recommendations):
        if rec_obj.status is RecStatus.RECOMMENDED and rng.random() < 0.5:
            status_name = rng.choice(("approved", "declined"))
            state, step = dispose_recommendation(
                state, rec_obj.id, RecStatus(status_name), analyst("sim")
            )
            trace.records.append(step)
            _snapshot(trace, state)

    trace.state = state
    return trace


@lru_cache(maxsize=2)
def case_bank(n: int = 1000) -> tuple[CaseTrace, ...]:
    return tuple(build_case(i) for i in range(n))


# ---------------------------------------------------------------------------
# Property drivers. Each checks one global invariant across many randomized
# hunts (or self-contained random inputs) and raises AssertionError with the
# offending case seed on failure. The randomized suites and the acceptance
# gate both call these, so a claim checked here is checked exactly once.


def prop_facts_monotonic(traces: tuple[CaseTrace, ...]) -> None:
    """The fact set never shrinks between consecutive applied steps."""
    for t in traces:
        for i, ((before, _), (after, _)) in enumerate(
            zip(t.snapshots, t.snapshots[1:])
        ):
            lost = before - after
            assert not lost, (
                f"case {t.seed}: facts vanished at snapshot {i + 1}: {sorted(lost)}"
            )


def prop_promotion_sound(traces: tuple[CaseTrace, ...]) -> None:
    """Facts exist iff an accepting promotion added them, rejected predicates
    stay out, and every stored provenance chain bottoms out in telemetry or
    intelligence references.
    """
    for t in traces:
        facts = {str(p) for p in t.state.k.facts}
        accepted: list[str] = []
        rejected: set[str] = set()
        for r in t.records:
            if r.kind is not StepKind.PROMOTE:
                continue
            if r.deltas.facts_added:
                accepted.extend(str(p) for p in r.deltas.facts_added)
            else:
                for hid in r.deltas.hyps_removed:
                    rejected.add(str(t.state.hypotheses[hid].predicate))
        assert len(accepted) == len(set(accepted)), (
            f"case {t.seed}: a predicate was promoted twice"
        )
        assert set(accepted) == facts, (
            f"case {t.seed}: fact base diverges from accepting promotions: "
            f"{sorted(set(accepted) ^ facts)}"
        )
        # a rejection later overridden to accepted is no longer "kept out"
        overridden = rejected & set(accepted)
        assert not (rejected - overridden) & facts, f"case {t.seed}"
        for p, chain in t.state.k.facts.items():
            leaves = [e for e in chain if e.kind is not EvidenceKind.HYPOTHESIS]
            assert leaves, f"case {t.seed}: chain for {p} never reaches evidence"
            assert all(
                e.kind in (EvidenceKind.TELEMETRY, EvidenceKind.INTEL)
                for e in leaves
            ), f"case {t.seed}: foreign evidence kind in chain for {p}"
            for e in chain:
                if e.kind is EvidenceKind.HYPOTHESIS:
                    assert e.source in t.state.hypotheses, (
                        f"case {t.seed}: chain for {p} cites unknown {e.source}"
                    )


def prop_facts_pending_disjoint(traces: tuple[CaseTrace, ...]) -> None:
    """No predicate is simultaneously an established fact and a pending
    hypothesis, at any observed point of any hunt."""
    for t in traces:
        for i, (facts, pending) in enumerate(t.snapshots):
            both = facts & pending
            assert not both, (
                f"case {t.seed}: snapshot {i}: {sorted(both)} is fact and pending"
            )


def prop_replay_fixpoint(traces: tuple[CaseTrace, ...]) -> None:
    """Replaying a journal over a fresh boot of the same configuration
    reproduces the final semantic state bit for bit."""
    for t in traces:
        rebuilt = replay(list(t.records), mini_config(t.gate))
        assert rebuilt.fingerprint() == t.state.fingerprint(), (
            f"case {t.seed}: replay diverged (gate={t.gate}, "
            f"corpus={t.corpus_seed}, {len(t.records)} records)"
        )
        assert rebuilt.seq == t.state.seq, f"case {t.seed}"


_LEVEL_NAMES = ("low", "moderate", "high")


def _reference_rank(
    candidates: list[str],
    matrix,
    order: tuple[str, ...],
    level_value: dict[str, int],
) -> list[str]:
    # independent of rank(): stable sort over explicit numeric keys
    def key(action: str) -> tuple[int, ...]:
        out = []
        for criterion in order:
            v = level_value[matrix.level(action, criterion).value]
            out.append(v if criterion_side(criterion) is Side.DEFENDER else -v)
        return tuple(out)

    return sorted(candidates, key=key)


def prop_ranking_invariant(n: int = 1000) -> None:
    """rank() agrees with a reference lexicographic sort and is invariant
    under every order-preserving relabeling of the cost levels."""
    actions = list(DEFAULT_COSTS)
    for i in range(n):
        rng = random.Random(7000 + i)
        decl = {
            a: {c: rng.choice(_LEVEL_NAMES) for c in ALL_CRITERIA} for a in actions
        }
        if rng.random() < 0.3:  # force exact ties between two actions
            src, dst = rng.sample(actions, 2)
            decl[dst] = dict(decl[src])
        matrix = load_cost_matrix(decl)
        candidates = rng.sample(actions, rng.randint(1, len(actions)))
        if rng.random() < 0.5:
            order = DEFAULT_PRIORITY
            got = rank(list(candidates), matrix)
        else:
            order = tuple(rng.sample(ALL_CRITERIA, rng.randint(1, len(ALL_CRITERIA))))
            got = rank(list(candidates), matrix, order=order)
        identity = {name: k for k, name in enumerate(_LEVEL_NAMES)}
        assert got == _reference_rank(candidates, matrix, order, identity), (
            f"case {i}: rank() disagrees with reference order"
        )
        for _ in range(3):
            values = sorted(rng.sample(range(-1000, 1000), len(_LEVEL_NAMES)))
            relabeled = dict(zip(_LEVEL_NAMES, values))
            assert _reference_rank(candidates, matrix, order, relabeled) == got, (
                f"case {i}: ranking not invariant under relabeling {relabeled}"
            )


# -- random AST generation for the format/parse round trip ------------------

# names that would collide with grammar keywords or the contextual words the
# parser dispatches on; generated identifiers avoid all of them
_BLOCKED_NAMES = frozenset(KEYWORDS) | {
    "on",
    "using",
    "and",
    "targets",
    "asset",
    "defender",
    "cc",
    "malware",
    "critical",
    "crown_jewel",
    "downtime",
    "fortify",
    "resource_constrained",
    "risk_averse",
}

_STRING_ALPHABET = 'abc XYZ_-."\\\n\t()0189é'


def _gen_ident(rng: random.Random) -> str:
    letters = "abcdefghijklmnopqrstuvwxyz"
    while True:
        word = "".join(rng.choice(letters) for _ in range(rng.randint(3, 8)))
        if word not in _BLOCKED_NAMES:
            return word


def _gen_string(rng: random.Random) -> str:
    return "".join(
        rng.choice(_STRING_ALPHABET) for _ in range(rng.randint(0, 12))
    )


def _gen_number(rng: random.Random) -> float:
    if rng.random() < 0.4:
        return float(rng.randint(-20, 10 ** rng.randint(1, 6)))
    # repr() of a 4-decimal float in this range never uses exponent form
    return round(rng.uniform(0.0001, 2000.0), 4)


def _gen_subject(rng: random.Random):
    if rng.random() < 0.3:
        start = rng.randint(0, 40)
        return NameRange(
            prefix=_gen_ident(rng), start=start, end=start + rng.randint(0, 9)
        )
    name = _gen_ident(rng)
    if rng.random() < 0.25:  # plain names may end in digits
        name += str(rng.randint(0, 99))
    return name


def _gen_pattern(rng: random.Random) -> PredPattern:
    return PredPattern(
        name=_gen_ident(rng),
        args=tuple(_gen_ident(rng) for _ in range(rng.randint(0, 3))),
    )


def _gen_decl(rng: random.Random, kind: str):
    if kind == "intel":
        return IntelDecl(
            cc_hosts=tuple(_gen_string(rng) for _ in range(rng.randint(0, 3))),
            malware=tuple(
                (_gen_string(rng), _gen_string(rng))
                for _ in range(rng.randint(0, 2))
            ),
        )
    if kind == "telemetry":
        return TelemetryDecl(
            sources=tuple(_gen_ident(rng) for _ in range(rng.randint(1, 3)))
        )
    if kind == "detector":
        return DetectorDecl(
            name=_gen_ident(rng),
            source=_gen_ident(rng),
            params=tuple(
                (_gen_ident(rng), _gen_number(rng))
                for _ in range(rng.randint(0, 4))
            ),
        )
    if kind == "case":
        return CaseDecl(
            name=_gen_ident(rng),
            pattern=_gen_pattern(rng),
            hypotheses=tuple(_gen_pattern(rng) for _ in range(rng.randint(1, 3))),
            confidence=None if rng.random() < 0.5 else _gen_number(rng),
        )
    if kind == "verifier":
        return VerifierDecl(
            name=_gen_ident(rng),
            input_pred=_gen_ident(rng),
            using=_gen_ident(rng),
        )
    if kind == "action":
        return ActionDecl(
            name=_gen_ident(rng),
            target_kind=_gen_ident(rng),
            rule=_gen_ident(rng),
        )
    if kind == "costs":
        return CostsDecl(
            rows=tuple(
                CostRow(
                    action=_gen_ident(rng),
                    entries=tuple(
                        (_gen_ident(rng), _gen_ident(rng))
                        for _ in range(rng.randint(1, 6))
                    ),
                )
                for _ in range(rng.randint(1, 5))
            )
        )
    if kind == "asset":
        flag_pool = [("critical",), ("crown_jewel",), ("downtime", _gen_ident(rng))]
        return AssetProfileDecl(
            subjects=tuple(_gen_subject(rng) for _ in range(rng.randint(1, 3))),
            flags=tuple(
                rng.choice(flag_pool) for _ in range(rng.randint(0, 3))
            ),
        )
    if kind == "defender":
        flags: list[tuple] = []
        for _ in range(rng.randint(1, 3)):  # never empty: it normalizes away
            roll = rng.random()
            if roll < 0.3:
                flags.append(("resource_constrained",))
            elif roll < 0.6:
                flags.append(("risk_averse",))
            else:
                flags.append(
                    ("fortify", *(_gen_subject(rng) for _ in range(rng.randint(1, 3))))
                )
        return DefenderProfileDecl(flags=tuple(flags))
    if kind == "goal":
        return GoalDecl(goal=_gen_ident(rng))
    raise ValueError(kind)


_DECL_KINDS = (
    "intel",
    "telemetry",
    "detector",
    "case",
    "verifier",
    "action",
    "costs",
    "asset",
    "defender",
    "goal",
)


def gen_hunt_ast(rng: random.Random) -> HuntSpecAst:
    decls = []
    have_costs = False
    for _ in range(rng.randint(0, 8)):
        kind = rng.choice(_DECL_KINDS)
        if kind == "costs":
            if have_costs:  # one costs block per hunt
                continue
            have_costs = True
        decls.append(_gen_decl(rng, kind))
    return HuntSpecAst(name=_gen_string(rng), decls=tuple(decls))


def prop_format_parse_identity(n: int = 1000) -> None:
    """parse(format(ast)) == ast for random well-formed ASTs, and the
    rendered text is a formatting fixpoint."""
    for i in range(n):
        rng = random.Random(3000 + i)
        ast = gen_hunt_ast(rng)
        text = format_hunt(ast)
        reparsed = parse_hunt(text)
        assert reparsed == ast, f"case {i}: round trip changed the tree:\n{text}"
        assert format_hunt(reparsed) == text, f"case {i}: formatter not a fixpoint"
