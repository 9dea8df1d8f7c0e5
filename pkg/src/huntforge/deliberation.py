"""Action deliberation: categorical cost model, applicability rules, ranking.

Accepted facts are turned into protective-action recommendations by
filtering a small action catalog through per-action applicability rules and
ordering surviving host actions lexicographically over a 5x6 cost matrix.
Costs are categorical (low / moderate / high); four criteria price the
defender's burden and two price the attacker's, so ranking minimizes the
defender columns and maximizes the attacker columns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

from .model import ActionRecommendation, Predicate


class Level(Enum):
    LOW = "low"
    MODERATE = "moderate"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return ("low", "moderate", "high").index(self.value)


class Side(str, Enum):
    DEFENDER = "defender"
    ATTACKER = "attacker"


DEFENDER_CRITERIA = ("C1", "C2", "C3", "C4")
ATTACKER_CRITERIA = ("C5", "C6")
ALL_CRITERIA = DEFENDER_CRITERIA + ATTACKER_CRITERIA

CRITERION_LABELS = {
    "C1": "system downtime",
    "C2": "allocated resources",
    "C3": "analysis time",
    "C4": "defender risk",
    "C5": "threat intel acquisition",
    "C6": "attacker risk",
}

# minimize defender burden first (risk, downtime, resources, analysis time),
# then prefer whatever costs the attacker most
DEFAULT_PRIORITY = ("C4", "C1", "C2", "C3", "C6", "C5")


def criterion_side(criterion: str) -> Side:
    return Side.DEFENDER if criterion in DEFENDER_CRITERIA else Side.ATTACKER


@dataclass(frozen=True)
class CostValue:
    side: Side
    level: Level


class CostModelError(ValueError):
    """Malformed cost declaration or ranking order."""


@dataclass
class CostMatrix:
    """action name -> {criterion -> CostValue} over C1..C6."""

    rows: dict[str, dict[str, CostValue]]

    def level(self, action: str, criterion: str) -> Level:
        return self.rows[action][criterion].level

    def to_dict(self) -> dict[str, dict[str, str]]:
        return {
            a: {c: cv.level.value for c, cv in row.items()}
            for a, row in self.rows.items()
        }


class TargetKind(str, Enum):
    HOST = "host"
    DECOY_SET = "decoy_set"
    INTEL_BUNDLE = "intel_bundle"


# applicability rule vocabulary; each rule gates one shipped action
RULES = ("crown_jewel", "no_downtime", "resource_constrained", "risk_averse",
         "inform_partners")


@dataclass(frozen=True)
class CatalogAction:
    name: str
    target_kind: TargetKind
    rule: str

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise CostModelError(f"unknown applicability rule: {self.rule}")


@dataclass
class ActionCatalog:
    actions: list[CatalogAction]

    def __post_init__(self) -> None:
        names = [a.name for a in self.actions]
        if len(names) != len(set(names)):
            raise CostModelError("duplicate action names in catalog")

    def __iter__(self):
        return iter(self.actions)

    def get(self, name: str) -> CatalogAction:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def names(self) -> list[str]:
        return [a.name for a in self.actions]


def default_catalog() -> ActionCatalog:
    return ActionCatalog(
        [
            CatalogAction("QUARANTINE", TargetKind.HOST, "crown_jewel"),
            CatalogAction("CONTAIN", TargetKind.HOST, "no_downtime"),
            CatalogAction("MISDIRECT", TargetKind.DECOY_SET, "resource_constrained"),
            CatalogAction("FORTIFY", TargetKind.DECOY_SET, "risk_averse"),
            CatalogAction("SHARE", TargetKind.INTEL_BUNDLE, "inform_partners"),
        ]
    )


DEFAULT_COSTS: dict[str, dict[str, str]] = {
    "QUARANTINE": {"C1": "high", "C2": "low", "C3": "low", "C4": "moderate",
                   "C5": "low", "C6": "low"},
    "CONTAIN": {"C1": "low", "C2": "low", "C3": "moderate", "C4": "moderate",
                "C5": "moderate", "C6": "moderate"},
    "MISDIRECT": {"C1": "low", "C2": "low", "C3": "low", "C4": "high",
                  "C5": "low", "C6": "high"},
    "FORTIFY": {"C1": "low", "C2": "high", "C3": "low", "C4": "low",
                "C5": "moderate", "C6": "moderate"},
    "SHARE": {"C1": "low", "C2": "moderate", "C3": "low", "C4": "low",
              "C5": "moderate", "C6": "low"},
}


def load_cost_matrix(
    declaration: dict[str, dict[str, str]],
    catalog: Optional[ActionCatalog] = None,
) -> CostMatrix:
    """Build a CostMatrix from {action: {criterion: level}} tokens.

    Every catalog action needs a full C1..C6 row; sides are fixed by column
    (C1-C4 defender, C5-C6 attacker).
    """
    catalog = catalog or default_catalog()
    rows: dict[str, dict[str, CostValue]] = {}
    for action in catalog.names():
        if action not in declaration:
            raise CostModelError(f"cost matrix is missing a row for {action}")
        decl_row = declaration[action]
        row: dict[str, CostValue] = {}
        for criterion in ALL_CRITERIA:
            if criterion not in decl_row:
                raise CostModelError(f"{action}: missing criterion {criterion}")
            token = decl_row[criterion]
            try:
                level = Level(token)
            except ValueError:
                raise CostModelError(
                    f"{action}.{criterion}: unknown level token {token!r}"
                ) from None
            row[criterion] = CostValue(criterion_side(criterion), level)
        unknown = set(decl_row) - set(ALL_CRITERIA)
        if unknown:
            raise CostModelError(
                f"{action}: unknown criterion {sorted(unknown)[0]}"
            )
        rows[action] = row
    return CostMatrix(rows=rows)


def load_cost_matrix_file(path: str, catalog: Optional[ActionCatalog] = None) -> CostMatrix:
    with open(path, encoding="utf-8") as fh:
        return load_cost_matrix(json.load(fh), catalog)


# ---------------------------------------------------------------------------
# Profiles


@dataclass
class AssetProfile:
    host: str
    crown_jewel: bool = False
    critical: bool = False
    downtime_tolerance: str = "high"  # none | low | high

    def __post_init__(self) -> None:
        if self.downtime_tolerance not in ("none", "low", "high"):
            raise ValueError(f"bad downtime_tolerance: {self.downtime_tolerance}")
        if self.crown_jewel:
            self.critical = True  # crown jewels are critical by definition


@dataclass
class DefenderProfile:
    resource_constrained: bool = False
    risk_averse: bool = False
    goals: set[str] = field(default_factory=set)
    fortify_targets: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Applicability and ranking


def _rule_holds(
    rule: str,
    fact: Predicate,
    asset: Optional[AssetProfile],
    defender: DefenderProfile,
) -> bool:
    if rule == "crown_jewel":
        return fact.name == "infected" and asset is not None and asset.crown_jewel
    if rule == "no_downtime":
        return (
            fact.name == "infected"
            and asset is not None
            and asset.downtime_tolerance == "none"
        )
    if rule == "resource_constrained":
        return defender.resource_constrained
    if rule == "risk_averse":
        return defender.risk_averse
    if rule == "inform_partners":
        return fact.name == "cec" and "inform_partners" in defender.goals
    raise CostModelError(f"unknown applicability rule: {rule}")


def applicable_actions(
    fact: Predicate,
    asset: Optional[AssetProfile],
    defender: DefenderProfile,
    catalog: ActionCatalog,
) -> list[str]:
    """Catalog actions whose rule holds for this fact, in catalog order."""
    if fact.name == "infected" and asset is None:
        raise CostModelError(f"fact {fact} concerns an unknown host")
    return [
        a.name for a in catalog if _rule_holds(a.rule, fact, asset, defender)
    ]


def rank(
    candidates: list[str],
    matrix: CostMatrix,
    order: Iterable[str] = DEFAULT_PRIORITY,
) -> list[str]:
    """Order candidates lexicographically over the criterion priority list.

    Defender criteria are minimized, attacker criteria maximized; levels are
    compared only by low < moderate < high. The sort is stable, so ties keep
    the caller's (catalog) order.
    """
    order = tuple(order)
    for criterion in order:
        if criterion not in ALL_CRITERIA:
            raise CostModelError(f"unknown criterion in priority order: {criterion}")

    def key(action: str) -> tuple[int, ...]:
        out = []
        for criterion in order:
            value = matrix.level(action, criterion).rank
            if criterion_side(criterion) is Side.ATTACKER:
                value = -value
            out.append(value)
        return tuple(out)

    return sorted(candidates, key=key)


def deliberate(
    facts: list[Predicate],
    assets: dict[str, AssetProfile],
    defender: DefenderProfile,
    catalog: ActionCatalog,
    matrix: CostMatrix,
    emitted_actions: set[str],
    bundle_facts: list[Predicate],
    next_id: Callable[[], str],
    order: Iterable[str] = DEFAULT_PRIORITY,
    existing_keys: set[tuple[str, tuple[str, ...], str]] = frozenset(),
) -> list[ActionRecommendation]:
    """Turn newly accepted facts into recommendations.

    Host-targeted candidates compete per fact and only the top-ranked one is
    emitted for that fact's host. Defender-wide actions (decoy_set) and the
    intel bundle are emitted at most once per hunt; emitted_actions carries
    the names already used. The bundle target lists every accepted fact so
    recipients get the whole campaign picture.
    """
    recommendations: list[ActionRecommendation] = []
    for fact in facts:
        host = str(fact.args[0]) if fact.name == "infected" else None
        asset = assets.get(host) if host is not None else None
        candidates = applicable_actions(fact, asset, defender, catalog)

        host_candidates = [
            c for c in candidates if catalog.get(c).target_kind is TargetKind.HOST
        ]
        if host_candidates and host is not None:
            best = rank(host_candidates, matrix, order)[0]
            if (best, (host,), str(fact)) not in existing_keys:
                recommendations.append(
                    _make(best, [host], fact, catalog, matrix, next_id)
                )

        for name in candidates:
            entry = catalog.get(name)
            if entry.target_kind is TargetKind.HOST or name in emitted_actions:
                continue
            if entry.target_kind is TargetKind.DECOY_SET:
                targets = list(defender.fortify_targets)
            else:  # intel bundle
                targets = [str(p) for p in bundle_facts]
            if (name, tuple(targets), str(fact)) not in existing_keys:
                recommendations.append(
                    _make(name, targets, fact, catalog, matrix, next_id)
                )
            emitted_actions.add(name)
    return recommendations


def _make(action, targets, fact, catalog, matrix, next_id) -> ActionRecommendation:
    return ActionRecommendation(
        id=next_id(),
        action=action,
        targets=targets,
        fact=fact,
        cost_vector={c: matrix.level(action, c).value for c in ALL_CRITERIA},
        rule=catalog.get(action).rule,
    )


def recommendation_holds(
    rec: ActionRecommendation,
    assets: dict[str, AssetProfile],
    defender: DefenderProfile,
    catalog: ActionCatalog,
) -> bool:
    """Post-hoc audit: does the fired rule still hold for the recommendation."""
    host = str(rec.fact.args[0]) if rec.fact.name == "infected" else None
    asset = assets.get(host) if host is not None else None
    return _rule_holds(catalog.get(rec.action).rule, rec.fact, asset, defender)
