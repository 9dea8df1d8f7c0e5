"""Case expansion and verification manifolds.

Two case builtins: kge turns a beacon detection into cec / infected
threat hypotheses with intelligence-aware confidence, and impact walks
peer-contact telemetry outward from an accepted infection. Two verifier
builtins: analytics checks cec hypotheses against intelligence, and
forensics checks infected hypotheses against host artifact inventories.
"""

from __future__ import annotations

import logging
from typing import Optional

from .model import (
    Decision,
    Hypothesis,
    HypKind,
    Predicate,
    Verdict,
    hypothesis_ref,
    intel_ref,
    pred,
    telemetry_ref,
)
from .state import KnowledgeBase
from .telemetry import PEER_EVENT_TYPES, ForensicInventory, SyslogEvent

log = logging.getLogger(__name__)

SYSLOG_SOURCE = "syslog"
DEFAULT_CONFIDENCE_FACTOR = 0.5
DEFAULT_IMPACT_CONFIDENCE = 0.5


def kge_expand(
    hyp: Hypothesis,
    k: KnowledgeBase,
    confidence_factor: float = DEFAULT_CONFIDENCE_FACTOR,
) -> list[Hypothesis]:
    """Expand a beacon(remote, client) detection into threat hypotheses.

    Emits cec(remote) first, then infected(client, name) for every malware
    entry in intelligence. An intelligence hit on the remote keeps the
    detection confidence; a miss discounts it by confidence_factor.
    """
    if hyp.predicate.name != "beacon" or len(hyp.predicate.args) != 2:
        raise ValueError(f"kge expects beacon(remote, client), got {hyp.predicate}")
    remote, client = (str(a) for a in hyp.predicate.args)
    matched = remote in k.intelligence.cc_hosts
    confidence = hyp.confidence if matched else hyp.confidence * confidence_factor

    out = []
    evidence = [hypothesis_ref(hyp.id)]
    if matched:
        evidence.append(intel_ref(f"cc:{remote}"))
    out.append(
        Hypothesis(
            id="",
            kind=HypKind.THREAT,
            predicate=pred("cec", remote),
            confidence=confidence,
            evidence=evidence,
            origin="",
        )
    )
    for name in k.intelligence.malware:
        out.append(
            Hypothesis(
                id="",
                kind=HypKind.THREAT,
                predicate=pred("infected", client, name),
                confidence=confidence,
                evidence=[hypothesis_ref(hyp.id), intel_ref(f"malware:{name}")],
                origin="",
            )
        )
    return out


def impact_assess(
    fact: Predicate,
    k: KnowledgeBase,
    syslog: list[SyslogEvent],
    confidence: float = DEFAULT_IMPACT_CONFIDENCE,
    base_offset: int = 0,
) -> list[Hypothesis]:
    """Hypothesize spread from an accepted infected(host, malware) fact.

    Any peer-contact event touching the infected host implicates the
    other endpoint. Contact is treated as symmetric and each implicated
    host is emitted once, in first-contact order.
    """
    if fact.name != "infected" or len(fact.args) != 2:
        raise ValueError(f"impact expects infected(host, malware), got {fact}")
    host, malware = (str(a) for a in fact.args)

    touched: dict[str, list[int]] = {}
    for i, ev in enumerate(syslog):
        if ev.event_type not in PEER_EVENT_TYPES or not ev.peer:
            continue
        if ev.peer == host:
            other = ev.host
        elif ev.host == host:
            other = ev.peer
        else:
            continue
        if other != host:
            touched.setdefault(other, []).append(i)

    out = []
    for other, idxs in touched.items():
        out.append(
            Hypothesis(
                id="",
                kind=HypKind.THREAT,
                predicate=pred("infected", other, malware),
                confidence=confidence,
                evidence=[telemetry_ref(SYSLOG_SOURCE, base_offset + i) for i in idxs],
                origin="",
            )
        )
    return out


def verify_analytics(hyp: Hypothesis, k: KnowledgeBase) -> Optional[Verdict]:
    """Accept a cec(host) hypothesis iff intelligence lists the host."""
    if hyp.predicate.name != "cec" or len(hyp.predicate.args) != 1:
        raise ValueError(f"analytics expects cec(host), got {hyp.predicate}")
    host = str(hyp.predicate.args[0])
    if host in k.intelligence.cc_hosts:
        return Verdict(
            hypothesis_id=hyp.id,
            decision=Decision.ACCEPTED,
            verifier="analytics",
            rationale=[intel_ref(f"cc:{host}")],
        )
    return Verdict(
        hypothesis_id=hyp.id,
        decision=Decision.REJECTED,
        verifier="analytics",
        rationale=[],
    )


def verify_forensics(
    hyp: Hypothesis,
    k: KnowledgeBase,
    inventories: dict[str, ForensicInventory],
) -> Optional[Verdict]:
    """Check an infected(host, malware) hypothesis against host artifacts.

    No inventory for the host means verification is unavailable: returns
    None and the hypothesis stays pending. With an inventory in hand the
    verdict is accept iff the malware hash appears among the artifacts.
    """
    if hyp.predicate.name != "infected" or len(hyp.predicate.args) != 2:
        raise ValueError(f"forensics expects infected(host, malware), got {hyp.predicate}")
    host, name = (str(a) for a in hyp.predicate.args)
    inventory = inventories.get(host)
    if inventory is None:
        log.debug("forensics: no inventory for %s, verification unavailable", host)
        return None
    digest = k.intelligence.malware.get(name)
    if digest is not None:
        for idx, (sha256, _path) in enumerate(inventory.artifacts):
            if sha256 == digest:
                return Verdict(
                    hypothesis_id=hyp.id,
                    decision=Decision.ACCEPTED,
                    verifier="forensics",
                    rationale=[
                        telemetry_ref(f"forensics:{host}", idx),
                        intel_ref(f"malware:{name}"),
                    ],
                )
    return Verdict(
        hypothesis_id=hyp.id,
        decision=Decision.REJECTED,
        verifier="forensics",
        rationale=[],
    )


def intel_lookup(k: KnowledgeBase, indicator: str) -> list[tuple[str, str]]:
    return k.intelligence.lookup(indicator)
