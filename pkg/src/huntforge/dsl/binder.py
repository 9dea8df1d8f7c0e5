"""Binds a parsed hunt AST to a runnable HuntConfig.

Name resolution happens here: detector, case and verifier names must
match builtin manifold implementations, telemetry sources must be
declared before a detector can consume them, and cost rows must cover
the declared action catalog. Decision manifolds have no surface syntax;
when actions are declared the binder registers the infected-fact
deliberator and then the cec-fact deliberator.
"""

from __future__ import annotations

from typing import Optional

from ..deliberation import (
    ActionCatalog,
    AssetProfile,
    CatalogAction,
    CostMatrix,
    CostModelError,
    DefenderProfile,
    RULES,
    TargetKind,
    load_cost_matrix,
)
from ..detectors import DetectorError
from ..engine import (
    BUILTIN_CASES,
    BUILTIN_DECISIONS,
    BUILTIN_DETECTORS,
    BUILTIN_VERIFIER_FNS,
    BUILTIN_VERIFIERS,
    _beacon_params,
)
from ..state import (
    CaseEntry,
    DecisionEntry,
    DetectorEntry,
    HuntConfig,
    IntelStore,
    StateError,
    VerifierEntry,
)
from .lexer import Span
from .parser import (
    ActionDecl,
    AssetProfileDecl,
    CaseDecl,
    CostsDecl,
    DefenderProfileDecl,
    DetectorDecl,
    GoalDecl,
    HuntSpecAst,
    IntelDecl,
    TelemetryDecl,
    VerifierDecl,
)

KNOWN_SOURCES = ("http", "syslog")
PRED_ARITY = {"beacon": 2, "cec": 1, "infected": 2}
DETECTOR_PARAM_KEYS = {
    "beac": {"threshold", "min_events", "bin", "window", "max_period"},
    "histogram_baseline": {"min_count"},
}
VERIFIER_SOURCES = {"analytics": "intel", "forensics": "inventories"}
DOWNTIME_LEVELS = ("none", "low", "high")


class BindError(ValueError):
    def __init__(self, message: str, span: Optional[Span] = None):
        super().__init__(f"{span}: {message}" if span else message)
        self.span = span


def _check_sha256(digest: str, span) -> None:
    if len(digest) != 64 or any(c not in "0123456789abcdef" for c in digest):
        raise BindError("malware hash must be 64 lowercase hex characters", span)


def _check_pattern(pattern, span) -> None:
    arity = PRED_ARITY.get(pattern.name)
    if arity is None:
        raise BindError(
            f"unknown predicate {pattern.name!r} "
            f"(known: {', '.join(sorted(PRED_ARITY))})",
            span,
        )
    if len(pattern.args) != arity:
        raise BindError(
            f"{pattern.name} takes {arity} argument(s), got {len(pattern.args)}", span
        )
    if len(set(pattern.args)) != len(pattern.args):
        raise BindError(f"repeated variable in {pattern.name}(...)", span)


def bind(ast: HuntSpecAst, analyst_gate: str = "required") -> HuntConfig:
    intel: Optional[IntelStore] = None
    sources: list[str] = []
    telemetry_seen = False
    detectors: list[DetectorEntry] = []
    cases: list[CaseEntry] = []
    verifiers: list[VerifierEntry] = []
    catalog_actions: list[CatalogAction] = []
    costs_decl: Optional[CostsDecl] = None
    assets: dict[str, AssetProfile] = {}
    defender_decl: Optional[DefenderProfileDecl] = None
    goals: set[str] = set()

    # telemetry sources resolve first so detector order never matters
    for decl in ast.decls:
        if isinstance(decl, TelemetryDecl):
            if telemetry_seen:
                raise BindError("duplicate telemetry block", decl.span)
            telemetry_seen = True
            for s in decl.sources:
                if s not in KNOWN_SOURCES:
                    raise BindError(
                        f"unknown telemetry source {s!r} "
                        f"(known: {', '.join(KNOWN_SOURCES)})",
                        decl.span,
                    )
                if s in sources:
                    raise BindError(f"telemetry source {s!r} listed twice", decl.span)
                sources.append(s)

    for decl in ast.decls:
        if isinstance(decl, TelemetryDecl):
            continue
        if isinstance(decl, IntelDecl):
            if intel is not None:
                raise BindError("duplicate intel block", decl.span)
            for _name, digest in decl.malware:
                _check_sha256(digest, decl.span)
            try:
                intel = IntelStore(
                    cc_hosts=set(decl.cc_hosts), malware=dict(decl.malware)
                )
            except StateError as exc:
                raise BindError(str(exc), decl.span) from exc
        elif isinstance(decl, DetectorDecl):
            _bind_detector(decl, sources, detectors)
        elif isinstance(decl, CaseDecl):
            _bind_case(decl, cases)
        elif isinstance(decl, VerifierDecl):
            _bind_verifier(decl, verifiers)
        elif isinstance(decl, ActionDecl):
            _bind_action(decl, catalog_actions)
        elif isinstance(decl, CostsDecl):
            costs_decl = decl  # parser already rejects duplicates
        elif isinstance(decl, AssetProfileDecl):
            _bind_asset_profile(decl, assets)
        elif isinstance(decl, DefenderProfileDecl):
            if defender_decl is not None:
                raise BindError("duplicate defender profile", decl.span)
            defender_decl = decl
        elif isinstance(decl, GoalDecl):
            goals.add(decl.goal)
        else:
            raise BindError(f"unbindable declaration {type(decl).__name__}", decl.span)

    catalog = ActionCatalog(tuple(catalog_actions))
    if catalog_actions and costs_decl is None:
        raise BindError("actions are declared but there is no costs block", ast.span)
    if costs_decl is not None:
        declaration = {}
        for row in costs_decl.rows:
            if row.action in declaration:
                raise BindError(f"duplicate cost row for {row.action}", row.span)
            declaration[row.action] = dict(row.entries)
        try:
            matrix = load_cost_matrix(declaration, catalog)
        except CostModelError as exc:
            raise BindError(str(exc), costs_decl.span) from exc
    else:
        matrix = CostMatrix(rows={})

    defender = _bind_defender(defender_decl, goals)

    decisions = (
        [DecisionEntry(name, pred) for name, pred in BUILTIN_DECISIONS]
        if catalog_actions
        else []
    )

    return HuntConfig(
        name=ast.name,
        intel=intel if intel is not None else IntelStore(),
        assets=assets,
        monitoring=sources,
        detectors=detectors,
        cases=cases,
        verifiers=verifiers,
        decisions=decisions,
        catalog=catalog,
        cost_matrix=matrix,
        defender=defender,
        analyst_gate=analyst_gate,
    )


def _bind_detector(decl: DetectorDecl, sources: list[str], out: list[DetectorEntry]) -> None:
    fn = BUILTIN_DETECTORS.get(decl.name)
    if fn is None:
        raise BindError(
            f"unknown detector {decl.name!r} "
            f"(known: {', '.join(sorted(BUILTIN_DETECTORS))})",
            decl.span,
        )
    if decl.source not in sources:
        raise BindError(
            f"detector {decl.name} reads undeclared telemetry source {decl.source!r}",
            decl.span,
        )
    allowed = DETECTOR_PARAM_KEYS[decl.name]
    params: dict[str, float] = {}
    for key, value in decl.params:
        if key not in allowed:
            raise BindError(f"detector {decl.name}: unknown parameter {key!r}", decl.span)
        if key in params:
            raise BindError(f"detector {decl.name}: duplicate parameter {key!r}", decl.span)
        params[key] = value
    entry = DetectorEntry(name=decl.name, source=decl.source, params=params, fn=fn)
    if decl.name == "beac":
        try:
            _beacon_params(entry)
        except DetectorError as exc:
            raise BindError(f"detector beac: {exc}", decl.span) from exc
    out.append(entry)


def _bind_case(decl: CaseDecl, out: list[CaseEntry]) -> None:
    builtin = BUILTIN_CASES.get(decl.name)
    if builtin is None:
        raise BindError(
            f"unknown case manifold {decl.name!r} "
            f"(known: {', '.join(sorted(BUILTIN_CASES))})",
            decl.span,
        )
    input_pred, consumes, serial, fn = builtin
    _check_pattern(decl.pattern, decl.span)
    if decl.pattern.name != input_pred:
        raise BindError(
            f"case {decl.name} consumes {input_pred}(...) inputs, "
            f"not {decl.pattern.name}(...)",
            decl.span,
        )
    for hyp_pattern in decl.hypotheses:
        _check_pattern(hyp_pattern, decl.span)
    params: dict[str, float] = {}
    if decl.confidence is not None:
        if not (0 <= decl.confidence <= 1):
            raise BindError("confidence must lie in [0, 1]", decl.span)
        params["confidence"] = decl.confidence
    out.append(
        CaseEntry(
            name=decl.name,
            input_pred=input_pred,
            consumes=consumes,
            serial=serial,
            params=params,
            fn=fn,
        )
    )


def _bind_verifier(decl: VerifierDecl, out: list[VerifierEntry]) -> None:
    expected = BUILTIN_VERIFIERS.get(decl.name)
    if expected is None:
        raise BindError(
            f"unknown verifier {decl.name!r} "
            f"(known: {', '.join(sorted(BUILTIN_VERIFIERS))})",
            decl.span,
        )
    if decl.input_pred == "beacon":
        raise BindError(
            "verifiers judge threat hypotheses (cec, infected), not detections",
            decl.span,
        )
    if decl.input_pred != expected:
        raise BindError(
            f"verifier {decl.name} judges {expected}(...) hypotheses, "
            f"not {decl.input_pred}(...)",
            decl.span,
        )
    wanted = VERIFIER_SOURCES[decl.name]
    if decl.using != wanted:
        raise BindError(
            f"verifier {decl.name} works using {wanted}, not {decl.using!r}", decl.span
        )
    out.append(
        VerifierEntry(
            name=decl.name, input_pred=expected, fn=BUILTIN_VERIFIER_FNS[decl.name]
        )
    )


def _bind_action(decl: ActionDecl, out: list[CatalogAction]) -> None:
    if any(a.name == decl.name for a in out):
        raise BindError(f"duplicate action {decl.name}", decl.span)
    try:
        kind = TargetKind(decl.target_kind)
    except ValueError:
        raise BindError(
            f"unknown target kind {decl.target_kind!r} "
            f"(known: {', '.join(k.value for k in TargetKind)})",
            decl.span,
        ) from None
    if decl.rule not in RULES:
        raise BindError(
            f"unknown applicability rule {decl.rule!r} "
            f"(known: {', '.join(RULES)})",
            decl.span,
        )
    out.append(CatalogAction(name=decl.name, target_kind=kind, rule=decl.rule))


def _bind_asset_profile(decl: AssetProfileDecl, assets: dict[str, AssetProfile]) -> None:
    crown_jewel = False
    critical = False
    tolerance = "high"
    for flag in decl.flags:
        if flag[0] == "crown_jewel":
            crown_jewel = True
        elif flag[0] == "critical":
            critical = True
        elif flag[0] == "downtime":
            if flag[1] not in DOWNTIME_LEVELS:
                raise BindError(
                    f"unknown downtime tolerance {flag[1]!r} "
                    f"(known: {', '.join(DOWNTIME_LEVELS)})",
                    decl.span,
                )
            tolerance = flag[1]
        else:
            raise BindError(f"unknown asset flag {flag[0]!r}", decl.span)
    hosts: list[str] = []
    for subject in decl.subjects:
        hosts.extend(subject.expand() if hasattr(subject, "expand") else [subject])
    for host in hosts:
        if host in assets:
            raise BindError(f"duplicate asset profile for {host}", decl.span)
        assets[host] = AssetProfile(
            host=host,
            crown_jewel=crown_jewel,
            critical=critical,
            downtime_tolerance=tolerance,
        )


def _bind_defender(
    decl: Optional[DefenderProfileDecl], goals: set[str]
) -> DefenderProfile:
    resource_constrained = False
    risk_averse = False
    fortify: list[str] = []
    if decl is not None:
        for flag in decl.flags:
            if flag[0] == "resource_constrained":
                resource_constrained = True
            elif flag[0] == "risk_averse":
                risk_averse = True
            elif flag[0] == "fortify":
                for subject in flag[1:]:
                    fortify.extend(
                        subject.expand() if hasattr(subject, "expand") else [subject]
                    )
            else:
                raise BindError(f"unknown defender flag {flag[0]!r}", decl.span)
    return DefenderProfile(
        resource_constrained=resource_constrained,
        risk_averse=risk_averse,
        goals=goals,
        fortify_targets=fortify,
    )
