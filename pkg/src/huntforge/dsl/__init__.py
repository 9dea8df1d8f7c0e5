"""The .hunt configuration language: lexer, parser, binder, formatter."""

from .lexer import LexError, Span, Token, TokenKind, tokenize  # noqa: F401
from .parser import HuntSpecAst, ParseError, parse_hunt  # noqa: F401
from .binder import BindError, bind  # noqa: F401
from .formatter import format_hunt  # noqa: F401


def load_hunt_text(text: str, analyst_gate: str = "required"):
    """Parse and bind a .hunt document into a runnable HuntConfig."""
    return bind(parse_hunt(text), analyst_gate=analyst_gate)


def fixture_path() -> str:
    """Path of the bundled reference hunt document."""
    from importlib.resources import files

    return str(files("huntforge.dsl").joinpath("zeus.hunt"))
