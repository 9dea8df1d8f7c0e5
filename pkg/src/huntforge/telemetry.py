"""Telemetry parsing, binning, and the synthetic campaign corpus.

Two monitored sources are supported: HTTP flow records and host syslog
events, both as NDJSON. The scenario generator synthesizes a beaconing
campaign over a small client network (periodic flows to a control host,
Poisson background chatter, lateral SMB access, per-host forensic
inventories) together with the ground truth used only by tests.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

import numpy as np

logger = logging.getLogger(__name__)

# SMB and friends carry a peer host; plain local events do not.
SYSLOG_VOCABULARY = frozenset(
    {"smb_access", "login", "logout", "process_start", "file_write", "dns_query"}
)
PEER_EVENT_TYPES = frozenset({"smb_access"})


class TelemetryError(ValueError):
    """Malformed or invalid telemetry input."""


@dataclass(frozen=True)
class HttpFlow:
    ts: float
    src: str
    dst: str
    dst_port: int
    host_header: str
    uri: str
    bytes_out: int
    bytes_in: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "ts": self.ts,
            "src": self.src,
            "dst": self.dst,
            "dst_port": self.dst_port,
            "host_header": self.host_header,
            "uri": self.uri,
            "bytes_out": self.bytes_out,
            "bytes_in": self.bytes_in,
        }


@dataclass(frozen=True)
class SyslogEvent:
    ts: float
    host: str
    process: str
    event_type: str
    message: str
    peer: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "ts": self.ts,
            "host": self.host,
            "process": self.process,
            "event_type": self.event_type,
            "message": self.message,
        }
        if self.peer is not None:
            d["peer"] = self.peer
        return d


@dataclass(frozen=True)
class ForensicInventory:
    """Artifacts collected from one endpoint: (sha256, path) pairs."""

    host: str
    artifacts: tuple[tuple[str, str], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "host": self.host,
            "artifacts": [{"sha256": h, "path": p} for h, p in self.artifacts],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ForensicInventory":
        return cls(
            host=d["host"],
            artifacts=tuple((a["sha256"], a["path"]) for a in d["artifacts"]),
        )


@dataclass
class PeerSeries:
    """Event counts for one (src, dst) pair over a fixed binning grid."""

    src: str
    dst: str
    bin_width: float
    counts: np.ndarray


_HTTP_REQUIRED = (
    "ts", "src", "dst", "dst_port", "host_header", "uri", "bytes_out", "bytes_in",
)
_SYSLOG_REQUIRED = ("ts", "host", "process", "event_type", "message")


def _parse_object(line: str) -> dict[str, Any]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TelemetryError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise TelemetryError("record is not a JSON object")
    return obj


def parse_http_record(line: str) -> HttpFlow:
    """Parse one NDJSON HTTP flow record. Unknown keys are ignored."""
    obj = _parse_object(line)
    for key in _HTTP_REQUIRED:
        if key not in obj:
            raise TelemetryError(f"missing required field: {key}")
    ts = float(obj["ts"])
    if not math.isfinite(ts) or ts < 0:
        raise TelemetryError(f"invalid ts: {obj['ts']}")
    src, dst = str(obj["src"]), str(obj["dst"])
    if src == dst:
        raise TelemetryError("src equals dst")
    port = int(obj["dst_port"])
    if not 1 <= port <= 65535:
        raise TelemetryError(f"dst_port out of range: {port}")
    bytes_out, bytes_in = int(obj["bytes_out"]), int(obj["bytes_in"])
    if bytes_out < 0 or bytes_in < 0:
        raise TelemetryError("negative byte count")
    return HttpFlow(
        ts=ts,
        src=src,
        dst=dst,
        dst_port=port,
        host_header=str(obj["host_header"]),
        uri=str(obj["uri"]),
        bytes_out=bytes_out,
        bytes_in=bytes_in,
    )


def parse_syslog_record(line: str, strict: bool = True) -> SyslogEvent:
    """Parse one NDJSON syslog record.

    strict mode rejects event types outside the declared vocabulary;
    lenient mode logs a warning and keeps the record.
    """
    obj = _parse_object(line)
    for key in _SYSLOG_REQUIRED:
        if key not in obj:
            raise TelemetryError(f"missing required field: {key}")
    ts = float(obj["ts"])
    if not math.isfinite(ts) or ts < 0:
        raise TelemetryError(f"invalid ts: {obj['ts']}")
    event_type = str(obj["event_type"])
    if event_type not in SYSLOG_VOCABULARY:
        if strict:
            raise TelemetryError(f"unknown event_type: {event_type}")
        logger.warning("unknown event_type %r accepted in lenient mode", event_type)
    peer = obj.get("peer")
    if event_type in PEER_EVENT_TYPES and peer is None:
        raise TelemetryError(f"event_type {event_type} requires a peer")
    return SyslogEvent(
        ts=ts,
        host=str(obj["host"]),
        process=str(obj["process"]),
        event_type=event_type,
        message=str(obj["message"]),
        peer=None if peer is None else str(peer),
    )


def build_peer_series(
    flows: Iterable[HttpFlow],
    src: str,
    dst: str,
    window: tuple[float, float],
    bin_width: float,
) -> PeerSeries:
    """Bin the (src, dst) flows of a half-open window into counts."""
    t0, t1 = window
    if t1 <= t0:
        raise TelemetryError("empty window")
    span = t1 - t0
    n_bins = span / bin_width
    if bin_width <= 0 or abs(n_bins - round(n_bins)) > 1e-9:
        raise TelemetryError(f"bin_width {bin_width} does not divide window {span}")
    n = int(round(n_bins))
    counts = np.zeros(n, dtype=np.int64)
    for f in flows:
        if f.src == src and f.dst == dst and t0 <= f.ts < t1:
            counts[int((f.ts - t0) / bin_width)] += 1
    return PeerSeries(src=src, dst=dst, bin_width=bin_width, counts=counts)


# ---------------------------------------------------------------------------
# Scenario synthesis


def fixture_malware_hash(prefix: str = "014e7", suffix: str = "7bbb") -> str:
    """The 64-hex fixture hash: fixed prefix/suffix, middle from seed 0."""
    middle = "".join(
        random.Random(0).choices("0123456789abcdef", k=64 - len(prefix) - len(suffix))
    )
    return prefix + middle + suffix


@dataclass
class ScenarioParams:
    clients: int = 10
    cc_host: str = "203.0.113.7"
    beacon_client: str = "client1"
    beacon_period: float = 7200.0
    beacon_jitter: float = 0.01          # fraction of the period
    window: float = 604800.0             # 7 days
    t0: float = 1609459200.0
    background_events: int = 84          # Poisson mean per background pair
    benign_hosts: int = 3
    lateral_targets: tuple[str, ...] = ("client2", "client7")
    infected: tuple[str, ...] = ("client1", "client2")
    malware_name: str = "zeus"
    malware_hash: str = field(default_factory=fixture_malware_hash)
    chatty_pair: Optional[tuple[str, str, int]] = None  # aperiodic high-volume pair

    def client_names(self) -> list[str]:
        return [f"client{i}" for i in range(1, self.clients + 1)]


@dataclass
class ScenarioCorpus:
    http: list[HttpFlow]
    syslog: list[SyslogEvent]
    forensics: list[ForensicInventory]
    truth: dict[str, Any]


def generate_scenario(seed: int, params: Optional[ScenarioParams] = None) -> ScenarioCorpus:
    """Synthesize a deterministic campaign corpus for one seed.

    Emits periodic beacon flows from the compromised client to the control
    host, Poisson background flows from every client to benign web hosts,
    smb_access syslog events toward the lateral-movement targets, and one
    forensic inventory per client (the infected ones carry the malware
    hash). Ground truth rides along for tests; detectors never see it.
    """
    p = params or ScenarioParams()
    clients = p.client_names()
    for target in p.lateral_targets:
        if target not in clients:
            raise TelemetryError(f"lateral target {target} is not a known client")

    rng = np.random.default_rng(seed)
    flows: list[HttpFlow] = []

    # Beacon train first: phase draw, then all jitters in one call. The
    # calibration suite depends on this exact draw order.
    n_beacons = int(p.window // p.beacon_period)
    jitter = p.beacon_period * p.beacon_jitter
    phase = rng.uniform(0.0, p.beacon_period)
    times = phase + p.beacon_period * np.arange(n_beacons)
    times = times + rng.uniform(-jitter, jitter, n_beacons)
    for t in times:
        if 0.0 <= t < p.window:
            flows.append(
                HttpFlow(
                    ts=p.t0 + float(t),
                    src=p.beacon_client,
                    dst=p.cc_host,
                    dst_port=443,
                    host_header="cdn.example",
                    uri="/u",
                    bytes_out=412,
                    bytes_in=1024,
                )
            )

    benign = [f"web{i}.example" for i in range(1, p.benign_hosts + 1)]
    for client in clients:
        for host in benign:
            n = int(rng.poisson(p.background_events))
            ts = rng.uniform(0.0, p.window, n)
            sizes = rng.integers(200, 40000, size=(n, 2))
            for k in range(n):
                flows.append(
                    HttpFlow(
                        ts=p.t0 + float(ts[k]),
                        src=client,
                        dst=host,
                        dst_port=443,
                        host_header=host,
                        uri=f"/page/{int(rng.integers(1, 50))}",
                        bytes_out=int(sizes[k, 0]),
                        bytes_in=int(sizes[k, 1]),
                    )
                )

    if p.chatty_pair is not None:
        src, dst, count = p.chatty_pair
        ts = rng.uniform(0.0, p.window, count)
        for t in ts:
            flows.append(
                HttpFlow(
                    ts=p.t0 + float(t),
                    src=src,
                    dst=dst,
                    dst_port=80,
                    host_header=dst,
                    uri="/poll",
                    bytes_out=64,
                    bytes_in=64,
                )
            )

    flows.sort(key=lambda f: (f.ts, f.src, f.dst))

    events: list[SyslogEvent] = []
    for target in p.lateral_targets:
        # a few share mounts spread over the first days
        for t in sorted(rng.uniform(0.25 * p.window, 0.75 * p.window, 3)):
            events.append(
                SyslogEvent(
                    ts=p.t0 + float(t),
                    host=target,
                    process="smbd",
                    event_type="smb_access",
                    peer=p.beacon_client,
                    message="share mounted",
                )
            )
    for client in clients:
        for t in rng.uniform(0.0, p.window, 4):
            events.append(
                SyslogEvent(
                    ts=p.t0 + float(t),
                    host=client,
                    process="sshd",
                    event_type="login",
                    message="session opened",
                )
            )
    events.sort(key=lambda e: (e.ts, e.host))

    inventories: list[ForensicInventory] = []
    for idx, client in enumerate(clients):
        artifacts: list[tuple[str, str]] = [
            (_benign_hash(seed, idx), "/usr/bin/updater")
        ]
        if client in p.infected:
            artifacts.append((p.malware_hash, f"/tmp/.cache/{p.malware_name}.bin"))
        inventories.append(ForensicInventory(host=client, artifacts=tuple(artifacts)))

    truth = {
        "beacon_pairs": [[p.beacon_client, p.cc_host]],
        "infected": list(p.infected),
        "lateral_targets": list(p.lateral_targets),
        "malware": {"name": p.malware_name, "sha256": p.malware_hash},
    }
    return ScenarioCorpus(http=flows, syslog=events, forensics=inventories, truth=truth)


def _benign_hash(seed: int, idx: int) -> str:
    return "".join(random.Random(f"{seed}:{idx}").choices("0123456789abcdef", k=64))


# ---------------------------------------------------------------------------
# File round-trips


def dump_ndjson(records: Iterable[Any], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def load_http_file(path: str) -> list[HttpFlow]:
    return _load_lines(path, parse_http_record)


def load_syslog_file(path: str, strict: bool = True) -> list[SyslogEvent]:
    return _load_lines(path, lambda line: parse_syslog_record(line, strict=strict))


def _load_lines(path, parse):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(parse(line))
            except TelemetryError as exc:
                raise TelemetryError(f"{path}:{lineno}: {exc}") from exc
    return out


def load_forensics_file(path: str) -> ForensicInventory:
    with open(path, encoding="utf-8") as fh:
        return ForensicInventory.from_dict(json.load(fh))
