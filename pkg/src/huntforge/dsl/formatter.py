"""Canonical pretty-printer for hunt ASTs.

format_hunt(parse_hunt(text)) normalizes whitespace and drops comments
but never reorders declarations, so reparsing the output reproduces the
same AST. Formatting is a fixpoint: format(parse(format(x))) is
format(parse(x)) byte for byte.
"""

from __future__ import annotations

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
    NameRange,
    PredPattern,
    Subject,
    TelemetryDecl,
    VerifierDecl,
)

_IND = "  "


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _quote(s: str) -> str:
    body = (
        s.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\t", "\\t")
    )
    return f'"{body}"'


def _subject(s: Subject) -> str:
    if isinstance(s, NameRange):
        return f"{s.prefix}{s.start}..{s.prefix}{s.end}"
    return s


def _pattern(p: PredPattern) -> str:
    return f"{p.name}({', '.join(p.args)})"


def _intel(d: IntelDecl, out: list[str]) -> None:
    out.append(f"{_IND}intel {{")
    if d.cc_hosts:
        hosts = ", ".join(_quote(h) for h in d.cc_hosts)
        out.append(f"{_IND * 2}cc [{hosts}]")
    if d.malware:
        entries = ", ".join(f"({_quote(n)}, {_quote(h)})" for n, h in d.malware)
        out.append(f"{_IND * 2}malware [{entries}]")
    out.append(f"{_IND}}}")


def _detector(d: DetectorDecl, out: list[str]) -> None:
    out.append(f"{_IND}detector {d.name} on {d.source} {{")
    for key, value in d.params:
        out.append(f"{_IND * 2}{key} {_num(value)}")
    out.append(f"{_IND}}}")


def _case(d: CaseDecl, out: list[str]) -> None:
    out.append(f"{_IND}case {d.name} when {_pattern(d.pattern)} {{")
    joined = " and ".join(_pattern(p) for p in d.hypotheses)
    out.append(f"{_IND * 2}hypothesize {joined}")
    if d.confidence is not None:
        out.append(f"{_IND * 2}confidence {_num(d.confidence)}")
    out.append(f"{_IND}}}")


def _costs(d: CostsDecl, out: list[str]) -> None:
    out.append(f"{_IND}costs {{")
    for row in d.rows:
        pairs = " ".join(f"{c} {lvl}" for c, lvl in row.entries)
        out.append(f"{_IND * 2}{row.action}: {pairs}")
    out.append(f"{_IND}}}")


def _asset_profile(d: AssetProfileDecl, out: list[str]) -> None:
    subjects = ", ".join(_subject(s) for s in d.subjects)
    if not d.flags:
        out.append(f"{_IND}profile asset {subjects}")
        return
    flags = ", ".join(" ".join(flag) for flag in d.flags)
    out.append(f"{_IND}profile asset {subjects} {{ {flags} }}")


def _defender_profile(d: DefenderProfileDecl, out: list[str]) -> None:
    if not d.flags:
        return  # an empty profile block carries nothing
    rendered = []
    for flag in d.flags:
        if flag[0] == "fortify":
            targets = ", ".join(_subject(s) for s in flag[1:])
            rendered.append(f"fortify {targets}")
        else:
            rendered.append(flag[0])
    out.append(f"{_IND}profile defender {{ {', '.join(rendered)} }}")


def format_hunt(ast: HuntSpecAst) -> str:
    out: list[str] = [f"hunt {_quote(ast.name)} {{"]
    for decl in ast.decls:
        if isinstance(decl, IntelDecl):
            _intel(decl, out)
        elif isinstance(decl, TelemetryDecl):
            out.append(f"{_IND}telemetry {{ {', '.join(decl.sources)} }}")
        elif isinstance(decl, DetectorDecl):
            _detector(decl, out)
        elif isinstance(decl, CaseDecl):
            _case(decl, out)
        elif isinstance(decl, VerifierDecl):
            out.append(
                f"{_IND}verifier {decl.name} on {decl.input_pred} using {decl.using}"
            )
        elif isinstance(decl, ActionDecl):
            out.append(
                f"{_IND}action {decl.name} targets {decl.target_kind} when {decl.rule}"
            )
        elif isinstance(decl, CostsDecl):
            _costs(decl, out)
        elif isinstance(decl, AssetProfileDecl):
            _asset_profile(decl, out)
        elif isinstance(decl, DefenderProfileDecl):
            _defender_profile(decl, out)
        elif isinstance(decl, GoalDecl):
            out.append(f"{_IND}goal {decl.goal}")
        else:
            raise TypeError(f"unknown declaration node {type(decl).__name__}")
    out.append("}")
    return "\n".join(out) + "\n"
