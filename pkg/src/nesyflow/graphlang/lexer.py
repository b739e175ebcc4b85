"""Tokenizer for .nsg graph sources.

Hand-rolled single-pass scanner tracking 1-based line/column positions for
every token.  Comments run from '#' to end of line.  Keywords are a closed
set; everything else word-shaped is an identifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .nodes import Diagnostic, Span, error


class TokenType(Enum):
    IDENT = "ident"
    INT = "int"
    KEYWORD = "keyword"
    LBRACE = "{"
    RBRACE = "}"
    LPAREN = "("
    RPAREN = ")"
    COMMA = ","
    COLON = ":"
    ARROW = "->"
    EOF = "eof"


KEYWORDS = frozenset(
    {
        "graph",
        "concept",
        "labels",
        "of",
        "contains",
        "has_a",
        "constraint",
        "on",
        "if",
        "then",
        "iff",
        "and",
        "or",
        "not",
        "exactly",
        "atMost",
        "atLeast",
        "is",
    }
)

_PUNCT = {
    "{": TokenType.LBRACE,
    "}": TokenType.RBRACE,
    "(": TokenType.LPAREN,
    ")": TokenType.RPAREN,
    ",": TokenType.COMMA,
    ":": TokenType.COLON,
}


@dataclass(frozen=True)
class Token:
    type: TokenType
    value: str
    span: Span

    def __repr__(self) -> str:  # compact for parser error messages
        return f"{self.type.name}({self.value!r}@{self.span.line}:{self.span.col})"


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def tokenize(source: str) -> tuple[list[Token], list[Diagnostic]]:
    """Scan `source` into tokens.  Unknown characters become diagnostics and
    are skipped so the parser still sees the rest of the stream."""
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def advance(text: str) -> None:
        nonlocal line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(ch)
            i += 1
            continue
        if ch == "#":
            j = source.find("\n", i)
            if j == -1:
                j = n
            advance(source[i:j])
            i = j
            continue
        span = Span(line, col)
        if _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident_char(source[j]):
                j += 1
            word = source[i:j]
            ttype = TokenType.KEYWORD if word in KEYWORDS else TokenType.IDENT
            tokens.append(Token(ttype, word, span))
            advance(word)
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            word = source[i:j]
            tokens.append(Token(TokenType.INT, word, span))
            advance(word)
            i = j
            continue
        if ch == "-" and i + 1 < n and source[i + 1] == ">":
            tokens.append(Token(TokenType.ARROW, "->", span))
            advance("->")
            i += 2
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, span))
            advance(ch)
            i += 1
            continue
        diags.append(error("lexical-error", f"unexpected character {ch!r}", span))
        advance(ch)
        i += 1

    tokens.append(Token(TokenType.EOF, "", Span(line, col)))
    return tokens, diags
