"""Tokenizer for .hunt documents.

Hash comments run to end of line. Structural words like "on", "using"
and "targets" are contextual: they lex as identifiers and the parser
matches them by value, which keeps the reserved-word set small.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class LexError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class TokenKind(Enum):
    KEYWORD = "keyword"
    IDENT = "ident"
    STRING = "string"
    NUMBER = "number"
    LBRACE = "{"
    RBRACE = "}"
    LBRACKET = "["
    RBRACKET = "]"
    LPAREN = "("
    RPAREN = ")"
    COMMA = ","
    COLON = ":"
    RANGE = ".."
    EOF = "eof"


KEYWORDS = frozenset(
    {
        "hunt",
        "intel",
        "telemetry",
        "detector",
        "case",
        "verifier",
        "action",
        "costs",
        "profile",
        "goal",
        "when",
        "hypothesize",
        "confidence",
    }
)

_PUNCT = {
    "{": TokenKind.LBRACE,
    "}": TokenKind.RBRACE,
    "[": TokenKind.LBRACKET,
    "]": TokenKind.RBRACKET,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    ",": TokenKind.COMMA,
    ":": TokenKind.COLON,
}


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    value: str
    span: Span = field(compare=False, repr=False)

    @property
    def number(self) -> float:
        return float(self.value)


def _ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance()
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                advance()
            continue

        start_line, start_col = line, col

        if c in _PUNCT:
            advance()
            tokens.append(
                Token(_PUNCT[c], c, Span(start_line, start_col, line, col))
            )
            continue

        if c == "." and i + 1 < n and text[i + 1] == ".":
            advance(2)
            tokens.append(Token(TokenKind.RANGE, "..", Span(start_line, start_col, line, col)))
            continue

        if c == '"':
            advance()
            buf = []
            while i < n and text[i] != '"':
                if text[i] == "\n":
                    raise LexError("unterminated string", start_line, start_col)
                if text[i] == "\\":
                    advance()
                    if i >= n:
                        raise LexError("unterminated string", start_line, start_col)
                    esc = text[i]
                    if esc == "n":
                        buf.append("\n")
                    elif esc == "t":
                        buf.append("\t")
                    elif esc in ('"', "\\"):
                        buf.append(esc)
                    else:
                        raise LexError(f"bad escape \\{esc}", line, col)
                else:
                    buf.append(text[i])
                advance()
            if i >= n:
                raise LexError("unterminated string", start_line, start_col)
            advance()  # closing quote
            tokens.append(
                Token(TokenKind.STRING, "".join(buf), Span(start_line, start_col, line, col))
            )
            continue

        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1 if c != "-" else i + 2
            while j < n and text[j].isdigit():
                j += 1
            # a dot starts a fraction only when a digit follows; ".." is a range
            if j + 1 < n and text[j] == "." and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            value = text[i:j]
            advance(j - i)
            tokens.append(
                Token(TokenKind.NUMBER, value, Span(start_line, start_col, line, col))
            )
            continue

        if _ident_start(c):
            j = i
            while j < n and _ident_char(text[j]):
                j += 1
            value = text[i:j]
            advance(j - i)
            kind = TokenKind.KEYWORD if value in KEYWORDS else TokenKind.IDENT
            tokens.append(Token(kind, value, Span(start_line, start_col, line, col)))
            continue

        raise LexError(f"illegal character {c!r}", line, col)

    tokens.append(Token(TokenKind.EOF, "", Span(line, col, line, col)))
    return tokens
