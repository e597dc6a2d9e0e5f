"""Object-like ``#define`` expansion."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .ast import MacroError, Token


@dataclass
class MacroTable:
    entries: dict[str, tuple[Token, ...]] = field(default_factory=dict)

    def define(self, name_tok: Token, body: tuple[Token, ...]) -> None:
        name = name_tok.text
        old = self.entries.get(name)
        if old is not None and [t.text for t in old] != [t.text for t in body]:
            raise MacroError(name_tok.loc, f"redefinition of macro {name!r} with a different body")
        if self._reaches(body, name):
            raise MacroError(name_tok.loc, f"recursive definition of macro {name!r}")
        self.entries[name] = body

    def _reaches(self, body: tuple[Token, ...], target: str) -> bool:
        seen: set[str] = set()
        todo = [t.text for t in body if t.kind == "identifier"]
        while todo:
            name = todo.pop()
            if name == target:
                return True
            if name in seen or name not in self.entries:
                continue
            seen.add(name)
            todo.extend(t.text for t in self.entries[name] if t.kind == "identifier")
        return False

    def expand(self, tok: Token) -> list[Token]:
        body = self.entries.get(tok.text) if tok.kind == "identifier" else None
        if body is None:
            return [tok]
        out: list[Token] = []
        for b in body:
            # replacement tokens report the use site
            out.extend(self.expand(replace(b, loc=tok.loc, end=tok.end, line_start=False)))
        if out and tok.line_start:
            out[0] = replace(out[0], line_start=True)
        return out


def _split_directive(tokens: list[Token], i: int) -> int:
    """Index one past the last token on the directive's line."""
    line = tokens[i].loc.line
    j = i + 1
    while tokens[j].kind != "eof" and tokens[j].loc.line == line:
        j += 1
    return j


def expand_macros(tokens: list[Token], table: MacroTable | None = None) -> list[Token]:
    """Strip ``#define`` directives and replace every macro use with its body."""
    table = table if table is not None else MacroTable()
    out: list[Token] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.is_punct("#") and tok.line_start:
            end = _split_directive(tokens, i)
            directive = tokens[i + 1 : end]
            if not directive or directive[0].text != "define":
                found = directive[0].text if directive else "end of line"
                raise MacroError(tok.loc, f"unsupported directive {found!r}")
            if len(directive) < 2 or directive[1].kind not in ("identifier", "keyword"):
                raise MacroError(tok.loc, "expected macro name after #define")
            name_tok = directive[1]
            if name_tok.kind == "keyword":
                raise MacroError(name_tok.loc, f"cannot redefine keyword {name_tok.text!r}")
            if len(directive) > 2 and directive[2].is_punct("(") and (
                directive[2].loc.column == name_tok.end.column + 1
            ):
                raise MacroError(name_tok.loc, "function-like macros are not supported")
            table.define(name_tok, tuple(directive[2:]))
            i = end
            continue
        out.extend(table.expand(tok))
        i += 1
    return out
