"""MiniC frontend: lexing, macro expansion, parsing and type resolution."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from .ast import (
    AstNode,
    FieldInfo,
    FrontendError,
    LexError,
    MacroError,
    MiniCTypeError,
    ParseError,
    SourceLocation,
    Token,
    TranslationUnit,
    TypeRef,
    sizeof,
)
from .dump import dump_ast
from .lexer import tokenize
from .macros import MacroTable, expand_macros
from .parser import parse
from .sema import resolve_types

__all__ = [
    "AstNode",
    "FieldInfo",
    "FrontendError",
    "LexError",
    "MacroError",
    "MacroTable",
    "MiniCTypeError",
    "ParseError",
    "SourceLocation",
    "Token",
    "TranslationUnit",
    "TypeRef",
    "dump_ast",
    "expand_macros",
    "load_program",
    "parse",
    "parse_source",
    "resolve_types",
    "sizeof",
    "tokenize",
]


def parse_source(text: str, file: str) -> TranslationUnit:
    """Tokenize, expand and parse ``text``; the result is not yet type-resolved."""
    return parse(expand_macros(tokenize(text, file)), file, text)


def load_program(paths: Sequence[str | Path], sources: dict[str, str] | None = None) -> list[TranslationUnit]:
    """Parse and type-resolve a set of files that see each other's declarations.

    ``sources`` maps a path to in-memory text, bypassing the filesystem.
    """
    tus = []
    for p in paths:
        name = str(p)
        text = sources[name] if sources and name in sources else Path(p).read_text(encoding="utf-8")
        tus.append(parse_source(text, name))
    for tu in tus:
        resolve_types(tu, [other for other in tus if other is not tu])
    return tus
