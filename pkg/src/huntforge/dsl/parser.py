"""Recursive-descent parser for .hunt documents.

Produces a span-annotated AST that preserves declaration order. Spans
are excluded from node equality so a formatted round trip compares
structurally. Parsing stops at the first error, reporting position and
the token set that would have been accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .lexer import Span, Token, TokenKind, tokenize


class ParseError(ValueError):
    def __init__(self, message: str, span: Span, expected: tuple[str, ...] = ()):
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{span}: {message}{hint}")
        self.span = span
        self.expected = expected


def _span_field():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NameRange:
    """A numeric-suffix range like client3..client10, bounds inclusive."""

    prefix: str
    start: int
    end: int
    span: Optional[Span] = _span_field()

    def expand(self) -> list[str]:
        return [f"{self.prefix}{i}" for i in range(self.start, self.end + 1)]


Subject = Union[str, NameRange]


@dataclass(frozen=True)
class PredPattern:
    name: str
    args: tuple[str, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class IntelDecl:
    cc_hosts: tuple[str, ...]
    malware: tuple[tuple[str, str], ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class TelemetryDecl:
    sources: tuple[str, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class DetectorDecl:
    name: str
    source: str
    params: tuple[tuple[str, float], ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class CaseDecl:
    name: str
    pattern: PredPattern
    hypotheses: tuple[PredPattern, ...]
    confidence: Optional[float]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class VerifierDecl:
    name: str
    input_pred: str
    using: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ActionDecl:
    name: str
    target_kind: str
    rule: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class CostRow:
    action: str
    entries: tuple[tuple[str, str], ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class CostsDecl:
    rows: tuple[CostRow, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class AssetProfileDecl:
    subjects: tuple[Subject, ...]
    flags: tuple[tuple[str, ...], ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class DefenderProfileDecl:
    # flag shapes: ("resource_constrained",), ("risk_averse",),
    # ("fortify", subject, ...)
    flags: tuple[tuple, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class GoalDecl:
    goal: str
    span: Optional[Span] = _span_field()


Decl = Union[
    IntelDecl,
    TelemetryDecl,
    DetectorDecl,
    CaseDecl,
    VerifierDecl,
    ActionDecl,
    CostsDecl,
    AssetProfileDecl,
    DefenderProfileDecl,
    GoalDecl,
]


@dataclass(frozen=True)
class HuntSpecAst:
    name: str
    decls: tuple[Decl, ...]
    span: Optional[Span] = _span_field()


_DECL_KEYWORDS = (
    "intel",
    "telemetry",
    "detector",
    "case",
    "verifier",
    "action",
    "costs",
    "profile",
    "goal",
)
_DEFENDER_FLAG_WORDS = frozenset({"resource_constrained", "risk_averse", "fortify"})
_NAME_SUFFIX = re.compile(r"^(.*?)(\d+)$")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def _describe(self, tok: Token) -> str:
        if tok.kind is TokenKind.EOF:
            return "end of input"
        return repr(tok.value)

    def fail(self, expected: tuple[str, ...]) -> "ParseError":
        tok = self.peek()
        return ParseError(f"unexpected {self._describe(tok)}", tok.span, expected)

    def expect(self, kind: TokenKind, value: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind is kind and (value is None or tok.value == value):
            return self._advance()
        raise self.fail((value if value is not None else kind.value,))

    def at_word(self, value: Optional[str] = None, k: int = 0) -> bool:
        tok = self.peek(k)
        if tok.kind not in (TokenKind.IDENT, TokenKind.KEYWORD):
            return False
        return value is None or tok.value == value

    def word(self, what: str = "name") -> Token:
        tok = self.peek()
        if tok.kind in (TokenKind.IDENT, TokenKind.KEYWORD):
            return self._advance()
        raise self.fail((what,))

    def expect_word(self, value: str) -> Token:
        if self.at_word(value):
            return self._advance()
        raise self.fail((value,))

    def number(self, what: str = "number") -> float:
        tok = self.peek()
        if tok.kind is TokenKind.NUMBER:
            self._advance()
            return float(tok.value)
        raise self.fail((what,))

    # -- grammar -----------------------------------------------------------

    def parse_spec(self) -> HuntSpecAst:
        start = self.peek().span
        self.expect(TokenKind.KEYWORD, "hunt")
        name = self.expect(TokenKind.STRING).value
        self.expect(TokenKind.LBRACE)
        decls: list[Decl] = []
        have_costs = False
        while not self.peek().kind is TokenKind.RBRACE:
            tok = self.peek()
            if tok.kind is not TokenKind.KEYWORD or tok.value not in _DECL_KEYWORDS:
                raise self.fail(_DECL_KEYWORDS)
            if tok.value == "costs":
                if have_costs:
                    raise ParseError("duplicate costs block", tok.span)
                have_costs = True
            decl = self._decl(tok.value)
            if decl is not None:  # an empty defender profile normalizes away
                decls.append(decl)
        self.expect(TokenKind.RBRACE)
        self.expect(TokenKind.EOF)
        return HuntSpecAst(name=name, decls=tuple(decls), span=start)

    def _decl(self, keyword: str) -> Optional[Decl]:
        return {
            "intel": self._intel,
            "telemetry": self._telemetry,
            "detector": self._detector,
            "case": self._case,
            "verifier": self._verifier,
            "action": self._action,
            "costs": self._costs,
            "profile": self._profile,
            "goal": self._goal,
        }[keyword]()

    def _intel(self) -> IntelDecl:
        start = self.expect(TokenKind.KEYWORD, "intel").span
        self.expect(TokenKind.LBRACE)
        cc: list[str] = []
        malware: list[tuple[str, str]] = []
        while not self.peek().kind is TokenKind.RBRACE:
            if self.at_word("cc"):
                self._advance()
                self.expect(TokenKind.LBRACKET)
                while self.peek().kind is TokenKind.STRING:
                    cc.append(self._advance().value)
                    if self.peek().kind is TokenKind.COMMA:
                        self._advance()
                    else:
                        break
                self.expect(TokenKind.RBRACKET)
            elif self.at_word("malware"):
                self._advance()
                self.expect(TokenKind.LBRACKET)
                while self.peek().kind is TokenKind.LPAREN:
                    self._advance()
                    mname = self.expect(TokenKind.STRING).value
                    self.expect(TokenKind.COMMA)
                    digest = self.expect(TokenKind.STRING).value
                    self.expect(TokenKind.RPAREN)
                    malware.append((mname, digest))
                    if self.peek().kind is TokenKind.COMMA:
                        self._advance()
                    else:
                        break
                self.expect(TokenKind.RBRACKET)
            else:
                raise self.fail(("cc", "malware"))
        self.expect(TokenKind.RBRACE)
        return IntelDecl(cc_hosts=tuple(cc), malware=tuple(malware), span=start)

    def _telemetry(self) -> TelemetryDecl:
        start = self.expect(TokenKind.KEYWORD, "telemetry").span
        self.expect(TokenKind.LBRACE)
        sources = [self.word("telemetry source").value]
        while self.peek().kind is TokenKind.COMMA:
            self._advance()
            sources.append(self.word("telemetry source").value)
        self.expect(TokenKind.RBRACE)
        return TelemetryDecl(sources=tuple(sources), span=start)

    def _detector(self) -> DetectorDecl:
        start = self.expect(TokenKind.KEYWORD, "detector").span
        name = self.word("detector name").value
        self.expect_word("on")
        source = self.word("telemetry source").value
        self.expect(TokenKind.LBRACE)
        params: list[tuple[str, float]] = []
        while not self.peek().kind is TokenKind.RBRACE:
            key = self.word("parameter name").value
            params.append((key, self.number("parameter value")))
        self.expect(TokenKind.RBRACE)
        return DetectorDecl(name=name, source=source, params=tuple(params), span=start)

    def _pattern(self) -> PredPattern:
        tok = self.word("predicate")
        self.expect(TokenKind.LPAREN)
        args: list[str] = []
        if self.peek().kind is not TokenKind.RPAREN:
            args.append(self.word("variable").value)
            while self.peek().kind is TokenKind.COMMA:
                self._advance()
                args.append(self.word("variable").value)
        self.expect(TokenKind.RPAREN)
        return PredPattern(name=tok.value, args=tuple(args), span=tok.span)

    def _case(self) -> CaseDecl:
        start = self.expect(TokenKind.KEYWORD, "case").span
        name = self.word("case name").value
        self.expect(TokenKind.KEYWORD, "when")
        pattern = self._pattern()
        self.expect(TokenKind.LBRACE)
        self.expect(TokenKind.KEYWORD, "hypothesize")
        hypotheses = [self._pattern()]
        while self.at_word("and"):
            self._advance()
            hypotheses.append(self._pattern())
        confidence = None
        if self.peek().kind is TokenKind.KEYWORD and self.peek().value == "confidence":
            self._advance()
            confidence = self.number("confidence value")
        self.expect(TokenKind.RBRACE)
        return CaseDecl(
            name=name,
            pattern=pattern,
            hypotheses=tuple(hypotheses),
            confidence=confidence,
            span=start,
        )

    def _verifier(self) -> VerifierDecl:
        start = self.expect(TokenKind.KEYWORD, "verifier").span
        name = self.word("verifier name").value
        self.expect_word("on")
        input_pred = self.word("predicate").value
        self.expect_word("using")
        using = self.word("evidence source").value
        return VerifierDecl(name=name, input_pred=input_pred, using=using, span=start)

    def _action(self) -> ActionDecl:
        start = self.expect(TokenKind.KEYWORD, "action").span
        name = self.word("action name").value
        self.expect_word("targets")
        target_kind = self.word("target kind").value
        self.expect(TokenKind.KEYWORD, "when")
        rule = self.word("applicability rule").value
        return ActionDecl(name=name, target_kind=target_kind, rule=rule, span=start)

    def _costs(self) -> CostsDecl:
        start = self.expect(TokenKind.KEYWORD, "costs").span
        self.expect(TokenKind.LBRACE)
        rows: list[CostRow] = []
        while not self.peek().kind is TokenKind.RBRACE:
            action_tok = self.word("action name")
            self.expect(TokenKind.COLON)
            entries: list[tuple[str, str]] = []
            # a row ends where the next word introduces another row
            while self.at_word() and not (
                self.peek(1).kind is TokenKind.COLON
            ):
                criterion = self.word("criterion").value
                level = self.word("cost level").value
                entries.append((criterion, level))
            if not entries:
                raise self.fail(("criterion",))
            rows.append(
                CostRow(action=action_tok.value, entries=tuple(entries), span=action_tok.span)
            )
        self.expect(TokenKind.RBRACE)
        return CostsDecl(rows=tuple(rows), span=start)

    def _subject(self) -> Subject:
        tok = self.word("host name")
        if self.peek().kind is not TokenKind.RANGE:
            return tok.value
        self._advance()
        end_tok = self.word("host name")
        m1 = _NAME_SUFFIX.match(tok.value)
        m2 = _NAME_SUFFIX.match(end_tok.value)
        if not m1 or not m2 or m1.group(1) != m2.group(1):
            raise ParseError(
                f"range endpoints must share a prefix: {tok.value}..{end_tok.value}",
                tok.span,
            )
        start_n, end_n = int(m1.group(2)), int(m2.group(2))
        if start_n > end_n:
            raise ParseError(
                f"descending range: {tok.value}..{end_tok.value}", tok.span
            )
        return NameRange(prefix=m1.group(1), start=start_n, end=end_n, span=tok.span)

    def _profile(self) -> Optional[Decl]:
        start = self.expect(TokenKind.KEYWORD, "profile").span
        if self.at_word("asset"):
            self._advance()
            subjects = [self._subject()]
            while self.peek().kind is TokenKind.COMMA:
                self._advance()
                subjects.append(self._subject())
            flags: list[tuple[str, ...]] = []
            if self.peek().kind is TokenKind.LBRACE:
                self._advance()
                while not self.peek().kind is TokenKind.RBRACE:
                    if self.at_word("critical") or self.at_word("crown_jewel"):
                        flags.append((self._advance().value,))
                    elif self.at_word("downtime"):
                        self._advance()
                        flags.append(("downtime", self.word("tolerance level").value))
                    else:
                        raise self.fail(("critical", "crown_jewel", "downtime"))
                    if self.peek().kind is TokenKind.COMMA:
                        self._advance()
                self.expect(TokenKind.RBRACE)
            return AssetProfileDecl(subjects=tuple(subjects), flags=tuple(flags), span=start)
        if self.at_word("defender"):
            self._advance()
            flags: list[tuple] = []
            if self.peek().kind is TokenKind.LBRACE:
                self._advance()
                while not self.peek().kind is TokenKind.RBRACE:
                    if self.at_word("resource_constrained") or self.at_word("risk_averse"):
                        flags.append((self._advance().value,))
                    elif self.at_word("fortify"):
                        self._advance()
                        targets: list[Subject] = [self._subject()]
                        while (
                            self.peek().kind is TokenKind.COMMA
                            and self.at_word(k=1)
                            and self.peek(1).value not in _DEFENDER_FLAG_WORDS
                        ):
                            self._advance()
                            targets.append(self._subject())
                        flags.append(("fortify", *targets))
                    else:
                        raise self.fail(
                            ("resource_constrained", "risk_averse", "fortify")
                        )
                    if self.peek().kind is TokenKind.COMMA:
                        self._advance()
                self.expect(TokenKind.RBRACE)
            if not flags:
                return None  # empty profile block carries nothing
            return DefenderProfileDecl(flags=tuple(flags), span=start)
        raise self.fail(("asset", "defender"))

    def _goal(self) -> GoalDecl:
        start = self.expect(TokenKind.KEYWORD, "goal").span
        return GoalDecl(goal=self.word("goal name").value, span=start)


def parse_hunt(text: str) -> HuntSpecAst:
    return _Parser(tokenize(text)).parse_spec()
