import pytest

from huntforge.dsl import load_hunt_text
from huntforge.model import Hypothesis, HypKind, HypStatus, intel_ref, pred
from huntforge.state import (
    IntelStore,
    KnowledgeBase,
    StateError,
    init_hunt,
)

from helpers import MINI_HUNT, fixture_text


def fresh(gate="auto"):
    return init_hunt(load_hunt_text(fixture_text(), analyst_gate=gate))


def hyp(hid="h1", host="client1", confidence=0.5):
    return Hypothesis(
        id=hid,
        kind=HypKind.THREAT,
        predicate=pred("infected", host, "zeus"),
        confidence=confidence,
        evidence=[intel_ref("malware:zeus")],
        origin="kge",
    )


class TestInitHunt:
    def test_fixture_boots(self):
        state = fresh()
        assert state.seq == 0
        assert state.pending() == []
        assert state.k.facts == {}
        assert state.analyst_gate == "auto"
        assert state.catalog.names()[0] == "QUARANTINE"

    def test_gate_setting_respected(self):
        assert fresh("required").analyst_gate == "required"

    def test_registries_populated(self):
        state = fresh()
        assert [d.name for d in state.detectors] == ["beac"]
        assert [(c.name, c.input_pred) for c in state.cases] == [
            ("kge", "beacon"),
            ("impact", "infected"),
        ]
        assert [(v.name, v.input_pred) for v in state.verifiers] == [
            ("analytics", "cec"),
            ("forensics", "infected"),
        ]
        assert [d.name for d in state.decisions] == ["malwareman", "cecman"]

    def test_intel_loaded(self):
        intel = fresh().k.intelligence
        assert "203.0.113.7" in intel.cc_hosts
        assert "zeus" in intel.malware

    def test_assets_loaded(self):
        assets = fresh().k.internal.assets
        assert assets["client1"].downtime_tolerance == "none"
        assert assets["client2"].crown_jewel

    def test_mini_fixture_boots(self):
        state = init_hunt(load_hunt_text(MINI_HUNT, analyst_gate="auto"))
        assert state.defender.fortify_targets == [f"decoy{i}" for i in range(1, 6)]
        assert state.k.internal.assets["client2"].crown_jewel


class TestIntelStore:
    def test_hash_must_be_64_hex(self):
        with pytest.raises(ValueError):
            IntelStore(cc_hosts=set(), malware={"zeus": "abc"})
        with pytest.raises(ValueError):
            IntelStore(cc_hosts=set(), malware={"zeus": "z" * 63 + "!"})

    def test_uppercase_hash_rejected(self):
        with pytest.raises(ValueError):
            IntelStore(cc_hosts=set(), malware={"zeus": "A" * 64})

    def test_lookup_by_host_name_and_hash(self):
        store = IntelStore(cc_hosts={"203.0.113.7"}, malware={"zeus": "a" * 64})
        assert store.lookup("203.0.113.7") == [("cc", "203.0.113.7")]
        assert store.lookup("zeus") == [("malware", "zeus")]
        assert store.lookup("a" * 64) == [("malware", "zeus")]
        assert store.lookup("nothing") == []


class TestKnowledgeBase:
    def test_add_and_query(self):
        kb = KnowledgeBase()
        p = pred("cec", "203.0.113.7")
        chain = [intel_ref("cc:203.0.113.7")]
        kb.add_fact(p, chain)
        assert kb.has_fact(p)
        assert kb.facts[p] == chain

    def test_duplicate_fact_rejected(self):
        kb = KnowledgeBase()
        p = pred("cec", "203.0.113.7")
        kb.add_fact(p, [])
        with pytest.raises(StateError):
            kb.add_fact(p, [])

    def test_insertion_order_preserved(self):
        kb = KnowledgeBase()
        kb.add_fact(pred("infected", "b", "m"), [])
        kb.add_fact(pred("infected", "a", "m"), [])
        assert [str(p) for p in kb.facts] == ["infected(b, m)", "infected(a, m)"]


class TestHuntState:
    def test_pending_and_known(self):
        state = fresh()
        state.hypotheses["h1"] = hyp()
        assert [h.id for h in state.pending()] == ["h1"]
        assert state.pending_predicates() == {pred("infected", "client1", "zeus")}
        assert pred("infected", "client1", "zeus") in state.known_predicates()

    def test_known_predicates_cover_facts_and_archived(self):
        state = fresh()
        resolved = hyp()
        resolved.resolve(HypStatus.ACCEPTED)
        state.hypotheses["h1"] = resolved
        state.k.add_fact(pred("cec", "x"), [])
        known = state.known_predicates()
        assert pred("infected", "client1", "zeus") in known
        assert pred("cec", "x") in known
        assert state.pending() == []

    def test_id_counters(self):
        state = fresh()
        assert [state.new_hyp_id() for _ in range(3)] == ["h1", "h2", "h3"]
        assert [state.new_rec_id() for _ in range(2)] == ["r1", "r2"]

    def test_clone_isolation(self):
        state = fresh()
        state.hypotheses["h1"] = hyp()
        copy = state.clone()
        copy.hypotheses["h1"].confidence = 0.9
        copy.k.add_fact(pred("cec", "x"), [])
        copy.consumed.add(("detect", "beac"))
        assert state.hypotheses["h1"].confidence == 0.5
        assert not state.k.has_fact(pred("cec", "x"))
        assert state.consumed == set()

    def test_clone_shares_registries(self):
        state = fresh()
        copy = state.clone()
        assert copy.detectors is state.detectors
        assert copy.catalog is state.catalog

    def test_fingerprint_stable_and_content_sensitive(self):
        a, b = fresh(), fresh()
        assert a.fingerprint() == b.fingerprint()
        b.hypotheses["h1"] = hyp()
        assert a.fingerprint() != b.fingerprint()

    def test_fingerprint_ignores_session_counters(self):
        a, b = fresh(), fresh()
        b.next_hyp = 40
        b.next_rec = 7
        b.consumed.add(("detect", "beac"))
        assert a.fingerprint() == b.fingerprint()

    def test_semantic_view_shape(self):
        state = fresh()
        state.hypotheses["h1"] = hyp()
        view = state.semantic_view()
        assert set(view) == {"seq", "facts", "hypotheses", "recommendations"}
        assert view["hypotheses"][0]["id"] == "h1"
        assert view["facts"] == []

    def test_semantic_view_orders_hypotheses_by_id(self):
        state = fresh()
        state.hypotheses["h10"] = hyp("h10")
        state.hypotheses["h2"] = hyp("h2", host="client2")
        ids = [h["id"] for h in state.semantic_view()["hypotheses"]]
        assert ids == sorted(ids)

    def test_facts_keep_provenance_in_view(self):
        state = fresh()
        chain = [intel_ref("cc:203.0.113.7")]
        state.k.add_fact(pred("cec", "203.0.113.7"), chain)
        entry = state.semantic_view()["facts"][0]
        assert entry["predicate"] == {"name": "cec", "args": ["203.0.113.7"]}
        assert entry["provenance"] == [chain[0].to_dict()]

    def test_find_recommendation_missing(self):
        assert fresh().find_recommendation("r1") is None


class TestConfigValidation:
    def test_duplicate_detector_name_rejected(self):
        cfg = load_hunt_text(fixture_text())
        cfg.detectors = cfg.detectors + cfg.detectors
        with pytest.raises(StateError, match="duplicate"):
            init_hunt(cfg)

    def test_undeclared_predicate_rejected(self):
        cfg = load_hunt_text(fixture_text())
        cfg.cases[0].input_pred = "ghost"
        with pytest.raises(StateError, match="ghost"):
            init_hunt(cfg)
