import json

import numpy as np
import pytest

import helpers
from huntforge.telemetry import (
    ForensicInventory,
    ScenarioParams,
    TelemetryError,
    build_peer_series,
    dump_ndjson,
    fixture_malware_hash,
    generate_scenario,
    load_http_file,
    load_syslog_file,
    parse_http_record,
    parse_syslog_record,
)

GOOD_HTTP = json.dumps(
    {
        "ts": 100.0,
        "src": "client1",
        "dst": "203.0.113.7",
        "dst_port": 443,
        "host_header": "cdn.example",
        "uri": "/ping",
        "bytes_out": 300,
        "bytes_in": 1200,
    }
)
GOOD_SYSLOG = json.dumps(
    {
        "ts": 50.0,
        "host": "client1",
        "process": "smbd",
        "event_type": "smb_access",
        "message": "share mounted",
        "peer": "client2",
    }
)


class TestHttpParsing:
    def test_good_record(self):
        flow = parse_http_record(GOOD_HTTP)
        assert flow.src == "client1" and flow.dst_port == 443

    def test_unknown_keys_ignored(self):
        obj = json.loads(GOOD_HTTP)
        obj["extra"] = "ignored"
        assert parse_http_record(json.dumps(obj)).src == "client1"

    @pytest.mark.parametrize("key", ["ts", "src", "dst", "dst_port", "bytes_in"])
    def test_missing_field_rejected(self, key):
        obj = json.loads(GOOD_HTTP)
        del obj[key]
        with pytest.raises(TelemetryError, match=key):
            parse_http_record(json.dumps(obj))

    @pytest.mark.parametrize(
        "patch",
        [
            {"ts": -1.0},
            {"ts": float("nan")},
            {"dst": "client1"},
            {"dst_port": 0},
            {"dst_port": 70000},
            {"bytes_out": -5},
        ],
    )
    def test_invalid_values_rejected(self, patch):
        obj = json.loads(GOOD_HTTP)
        obj.update(patch)
        with pytest.raises(TelemetryError):
            parse_http_record(json.dumps(obj))

    def test_malformed_json_rejected(self):
        with pytest.raises(TelemetryError):
            parse_http_record("{nope")
        with pytest.raises(TelemetryError):
            parse_http_record('["list"]')


class TestSyslogParsing:
    def test_good_record(self):
        ev = parse_syslog_record(GOOD_SYSLOG)
        assert ev.event_type == "smb_access" and ev.peer == "client2"

    def test_unknown_event_type_strict(self):
        obj = json.loads(GOOD_SYSLOG)
        obj["event_type"] = "teleport"
        with pytest.raises(TelemetryError):
            parse_syslog_record(json.dumps(obj))

    def test_unknown_event_type_lenient(self):
        obj = json.loads(GOOD_SYSLOG)
        obj["event_type"] = "teleport"
        ev = parse_syslog_record(json.dumps(obj), strict=False)
        assert ev.event_type == "teleport"

    def test_peer_required_for_contact_events(self):
        obj = json.loads(GOOD_SYSLOG)
        del obj["peer"]
        with pytest.raises(TelemetryError, match="peer"):
            parse_syslog_record(json.dumps(obj))

    def test_peer_optional_elsewhere(self):
        ev = parse_syslog_record(
            json.dumps(
                {
                    "ts": 1.0,
                    "host": "client1",
                    "process": "sshd",
                    "event_type": "login",
                    "message": "ok",
                }
            )
        )
        assert ev.peer is None


class TestPeerSeries:
    def test_bins_counts(self):
        flows = [
            parse_http_record(GOOD_HTTP),
            parse_http_record(GOOD_HTTP.replace("100.0", "250.0")),
        ]
        series = build_peer_series(flows, "client1", "203.0.113.7", (0.0, 600.0), 300.0)
        assert list(series.counts) == [2, 0]

    def test_window_boundary_is_half_open(self):
        flows = [parse_http_record(GOOD_HTTP.replace("100.0", "600.0"))]
        series = build_peer_series(flows, "client1", "203.0.113.7", (0.0, 600.0), 300.0)
        assert series.counts.sum() == 0

    def test_bad_windows_rejected(self):
        with pytest.raises(TelemetryError):
            build_peer_series([], "a", "b", (10.0, 10.0), 300.0)
        with pytest.raises(TelemetryError):
            build_peer_series([], "a", "b", (0.0, 500.0), 300.0)


class TestScenario:
    def test_deterministic_for_seed(self):
        a = generate_scenario(3)
        b = generate_scenario(3)
        assert [f.to_dict() for f in a.http] == [f.to_dict() for f in b.http]
        assert [e.to_dict() for e in a.syslog] == [e.to_dict() for e in b.syslog]
        assert a.truth == b.truth

    def test_seed_changes_corpus(self):
        assert [f.ts for f in generate_scenario(1).http] != [
            f.ts for f in generate_scenario(2).http
        ]

    def test_beacon_cadence(self):
        corpus = generate_scenario(5)
        params = ScenarioParams()
        ts = np.array(
            [f.ts for f in corpus.http if f.src == "client1" and f.dst == params.cc_host]
        )
        assert len(ts) == 84
        gaps = np.diff(np.sort(ts))
        assert abs(np.median(gaps) - 7200.0) < 300.0

    def test_infected_inventories_carry_hash(self):
        corpus = generate_scenario(5)
        params = ScenarioParams()
        by_host = {inv.host: inv for inv in corpus.forensics}
        assert len(by_host) == params.clients
        for host in params.infected:
            assert any(h == params.malware_hash for h, _ in by_host[host].artifacts)
        for host in set(by_host) - set(params.infected):
            assert all(h != params.malware_hash for h, _ in by_host[host].artifacts)

    def test_lateral_contacts_present(self):
        corpus = generate_scenario(5)
        peers = {
            e.peer
            for e in corpus.syslog
            if e.event_type == "smb_access" and e.host == "client1"
        } | {
            e.host
            for e in corpus.syslog
            if e.event_type == "smb_access" and e.peer == "client1"
        }
        assert {"client2", "client7"} <= peers

    def test_truth_names_the_campaign(self):
        truth = generate_scenario(5).truth
        assert truth["beacon_pairs"] == [["client1", "203.0.113.7"]]
        assert set(truth["infected"]) == {"client1", "client2"}
        assert truth["malware"]["name"] == "zeus"

    def test_all_records_reparse(self):
        corpus = generate_scenario(5)
        for flow in corpus.http:
            parse_http_record(json.dumps(flow.to_dict()))
        for event in corpus.syslog:
            parse_syslog_record(json.dumps(event.to_dict()))


class TestFiles:
    def test_ndjson_round_trip(self, tmp_path):
        corpus = helpers.mini_corpus(0)
        http_path = str(tmp_path / "t.http.ndjson")
        syslog_path = str(tmp_path / "t.syslog.ndjson")
        dump_ndjson(corpus.http, http_path)
        dump_ndjson(corpus.syslog, syslog_path)
        assert load_http_file(http_path) == corpus.http
        assert load_syslog_file(syslog_path) == corpus.syslog

    def test_inventory_round_trip(self):
        inv = ForensicInventory(host="client1", artifacts=(("a" * 64, "/tmp/x"),))
        assert ForensicInventory.from_dict(inv.to_dict()) == inv


def test_fixture_hash_shape():
    h = fixture_malware_hash()
    assert len(h) == 64
    assert h.startswith("014e7") and h.endswith("7bbb")
    assert set(h) <= set("0123456789abcdef")
    assert fixture_malware_hash() == h
