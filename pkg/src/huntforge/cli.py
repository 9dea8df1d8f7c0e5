"""The huntforge command line.

check     validate a .hunt document
fmt       canonically format a .hunt document
simulate  generate a synthetic telemetry corpus
run       execute a hunt over telemetry files
serve     start the HTTP service
replay    rebuild state from a journal and verify it
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .detectors import DetectorError
from .dsl import BindError, ParseError, bind, format_hunt, parse_hunt
from .dsl.lexer import LexError
from .engine import _beacon_params, ingest_telemetry, replay, run
from .journal import JournalError, JournalWriter, check_contiguous, read_journal
from .state import init_hunt
from .telemetry import (
    ScenarioParams,
    dump_ndjson,
    generate_scenario,
    load_forensics_file,
    load_http_file,
    load_syslog_file,
)

log = logging.getLogger(__name__)


def _fail(message: str, code: int = 1) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_config(path: str, analyst_gate: str):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return bind(parse_hunt(text), analyst_gate=analyst_gate), text


def cmd_check(args) -> int:
    try:
        config, _ = _load_config(args.spec, "required")
    except OSError as exc:
        return _fail(str(exc))
    except (LexError, ParseError, BindError) as exc:
        return _fail(f"{args.spec}:{exc}")
    print(
        f"ok: {config.name} "
        f"({len(config.detectors)} detector(s), {len(config.cases)} case(s), "
        f"{len(config.verifiers)} verifier(s), {len(config.catalog.names())} action(s))"
    )
    return 0


def cmd_fmt(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            text = fh.read()
        formatted = format_hunt(parse_hunt(text))
    except OSError as exc:
        return _fail(str(exc))
    except (LexError, ParseError) as exc:
        return _fail(f"{args.spec}:{exc}")
    if args.write:
        with open(args.spec, "w", encoding="utf-8") as fh:
            fh.write(formatted)
        print(f"formatted {args.spec}")
    else:
        sys.stdout.write(formatted)
    return 0


def cmd_simulate(args) -> int:
    params = ScenarioParams()
    corpus = generate_scenario(seed=args.seed, params=params)
    os.makedirs(args.out, exist_ok=True)
    prefix = os.path.join(args.out, args.prefix)
    dump_ndjson(corpus.http, f"{prefix}.http.ndjson")
    dump_ndjson(corpus.syslog, f"{prefix}.syslog.ndjson")
    for inventory in corpus.forensics:
        path = os.path.join(args.out, f"{inventory.host}.forensics.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(inventory.to_dict(), fh, sort_keys=True, indent=2)
    with open(f"{prefix}.truth.json", "w", encoding="utf-8") as fh:
        json.dump(corpus.truth, fh, sort_keys=True, indent=2)
    print(
        f"wrote {len(corpus.http)} http flows, {len(corpus.syslog)} syslog events, "
        f"{len(corpus.forensics)} inventories to {args.out} (seed {args.seed})"
    )
    return 0


def _classify_telemetry(paths):
    http, syslog, inventories = [], [], []
    for path in paths:
        if path.endswith(".http.ndjson"):
            http.extend(load_http_file(path))
        elif path.endswith(".syslog.ndjson"):
            syslog.extend(load_syslog_file(path))
        elif path.endswith(".forensics.json"):
            inventories.append(load_forensics_file(path))
        else:
            raise ValueError(
                f"cannot classify {path!r}: expected a *.http.ndjson, "
                "*.syslog.ndjson or *.forensics.json file"
            )
    return http, syslog, inventories


def cmd_run(args) -> int:
    gate = "auto" if args.auto_accept else "required"
    try:
        config, _ = _load_config(args.spec, gate)
    except OSError as exc:
        return _fail(str(exc))
    except (LexError, ParseError, BindError) as exc:
        return _fail(f"{args.spec}:{exc}")

    for entry in config.detectors:
        if entry.name != "beac":
            continue
        if args.beacon_threshold is not None:
            entry.params["threshold"] = args.beacon_threshold
        if args.beacon_window is not None:
            entry.params["window"] = args.beacon_window
        try:
            _beacon_params(entry)
        except DetectorError as exc:
            return _fail(f"detector beac: {exc}")

    try:
        http, syslog, inventories = _classify_telemetry(args.telemetry)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))

    state = init_hunt(config)
    ingest_telemetry(state, http=http, syslog=syslog, inventories=inventories)
    writer = JournalWriter(args.journal) if args.journal else None
    try:
        state, records, status = run(state, writer)
    finally:
        if writer is not None:
            writer.close()

    print(f"hunt {config.name}: {status} after {len(records)} step(s)")
    if state.k.facts:
        print("facts:")
        for p, chain in state.k.facts.items():
            print(f"  {p}  [{len(chain)} evidence link(s)]")
    pending = state.pending()
    if pending:
        print("pending hypotheses:")
        for h in pending:
            verdicts = ",".join(v.decision.value for v in h.verdicts) or "no verdict"
            print(f"  {h.id} {h.predicate} conf={h.confidence:.3f} ({verdicts})")
    if state.recommendations:
        print("recommendations:")
        for r in state.recommendations:
            targets = ", ".join(r.targets[:3]) + (" ..." if len(r.targets) > 3 else "")
            print(f"  {r.id} {r.action} -> {targets}  (rule {r.rule})")
    if args.journal:
        print(f"journal: {args.journal} ({len(records)} record(s))")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_replay(args) -> int:
    try:
        config, _ = _load_config(args.spec, "required")
        records = read_journal(args.journal)
        check_contiguous(records)
        state = replay(records, config)
    except OSError as exc:
        return _fail(str(exc))
    except (LexError, ParseError, BindError, JournalError) as exc:
        return _fail(str(exc))

    print(
        f"replayed {len(records)} record(s): seq={state.seq}, "
        f"{len(state.k.facts)} fact(s), {len(state.hypotheses)} hypothesis(es), "
        f"{len(state.recommendations)} recommendation(s)"
    )
    print(f"fingerprint: {state.fingerprint()}")
    if args.assert_final:
        with open(args.assert_final, encoding="utf-8") as fh:
            expected = json.load(fh)
        actual = state.semantic_view()
        if actual != expected:
            return _fail("replayed state does not match the expected final state", 2)
        print("final state matches")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="huntforge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a .hunt document")
    p.add_argument("spec")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("fmt", help="canonically format a .hunt document")
    p.add_argument("spec")
    p.add_argument("--write", action="store_true", help="rewrite the file in place")
    p.set_defaults(fn=cmd_fmt)

    p = sub.add_parser("simulate", help="generate a synthetic telemetry corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--prefix", default="scenario")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("run", help="execute a hunt over telemetry files")
    p.add_argument("--spec", required=True)
    p.add_argument(
        "--telemetry",
        nargs="+",
        required=True,
        help="*.http.ndjson, *.syslog.ndjson and *.forensics.json files",
    )
    p.add_argument("--auto-accept", action="store_true",
                   help="promote hypotheses per verifier verdict without an analyst")
    p.add_argument("--journal", help="write the step journal to this file")
    p.add_argument("--beacon-threshold", type=float, default=None)
    p.add_argument("--beacon-window", type=float, default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--data-dir", default=None,
                   help="session storage (default: $HUNTFORGE_DATA_DIR or ./huntforge-data)")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replay", help="rebuild state from a journal")
    p.add_argument("--journal", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--assert-final", default=None,
                   help="JSON file holding the expected semantic state")
    p.set_defaults(fn=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
