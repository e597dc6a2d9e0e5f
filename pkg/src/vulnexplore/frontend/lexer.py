"""Tokenizer for MiniC source text."""

from __future__ import annotations

import re

from .ast import LexError, SourceLocation, Token

KEYWORDS = frozenset(
    {
        "struct",
        "if",
        "else",
        "while",
        "return",
        "char",
        "short",
        "int",
        "unsigned",
        "long",
        "size_t",
        "void",
        "const",
    }
)

# longest first so that "->" wins over "-"
PUNCTUATORS = (
    "->", "==", "!=", "<=", ">=", "&&", "||",
    "(", ")", "{", "}", "[", "]", ";", ",", ".", "=", "<", ">",
    "+", "-", "*", "/", "%", "&", "|", "!", "~", "#",
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"0[xX][0-9A-Fa-f]+|[0-9]+")
_NUMBER_TAIL = re.compile(r"[A-Za-z0-9_]")
_SPACE = " \t\r\f\v"


def tokenize(source_text: str, file: str) -> list[Token]:
    """Split ``source_text`` into tokens, dropping whitespace and comments.

    The returned list always ends with an ``eof`` token.  A ``#`` that starts a
    line is kept as a punctuator; :func:`expand_macros` consumes the directive.
    """
    tokens: list[Token] = []
    i = 0
    line, col = 1, 1
    n = len(source_text)
    at_line_start = True

    def loc(l: int, c: int) -> SourceLocation:
        return SourceLocation(file, l, c)

    while i < n:
        ch = source_text[i]
        if ch == "\n":
            i += 1
            line, col = line + 1, 1
            at_line_start = True
            continue
        if ch in _SPACE:
            i += 1
            col += 1
            continue
        if source_text.startswith("//", i):
            while i < n and source_text[i] != "\n":
                i += 1
                col += 1
            continue
        if source_text.startswith("/*", i):
            start = loc(line, col)
            close = source_text.find("*/", i + 2)
            if close < 0:
                raise LexError(start, "unterminated comment")
            chunk = source_text[i : close + 2]
            newlines = chunk.count("\n")
            if newlines:
                line += newlines
                col = len(chunk) - chunk.rfind("\n")
            else:
                col += len(chunk)
            i = close + 2
            continue

        start_line, start_col = line, col
        if ch == '"' or ch == "'":
            j = i + 1
            while True:
                if j >= n or source_text[j] == "\n":
                    kind = "string" if ch == '"' else "char"
                    raise LexError(loc(start_line, start_col), f"unterminated {kind} literal")
                if source_text[j] == "\\":
                    j += 2
                    continue
                if source_text[j] == ch:
                    break
                j += 1
            text = source_text[i : j + 1]
            kind = "string-literal" if ch == '"' else "char-literal"
            if kind == "char-literal" and len(text) <= 2:
                raise LexError(loc(start_line, start_col), "empty char literal")
        elif m := _IDENT.match(source_text, i):
            text = m.group()
            kind = "keyword" if text in KEYWORDS else "identifier"
        elif m := _NUMBER.match(source_text, i):
            text = m.group()
            end = m.end()
            if end < n and _NUMBER_TAIL.match(source_text, end):
                raise LexError(loc(start_line, start_col), "malformed integer literal")
            kind = "integer-literal"
        else:
            for p in PUNCTUATORS:
                if source_text.startswith(p, i):
                    text = p
                    kind = "punctuator"
                    break
            else:
                raise LexError(loc(start_line, start_col), f"illegal character {ch!r}")

        i += len(text)
        col += len(text)
        tokens.append(
            Token(kind, text, loc(start_line, start_col), loc(line, col - 1), at_line_start)
        )
        at_line_start = False

    tokens.append(Token("eof", "", loc(line, col), loc(line, col), at_line_start))
    return tokens
