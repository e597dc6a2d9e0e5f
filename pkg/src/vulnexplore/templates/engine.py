"""Evaluate matcher expressions over typed ASTs.

Semantics, relative to the node being tested:

* a top-level ``NodeKind`` matches a node of that kind whose inner matchers all hold;
* inside a ``NodeKind``, a nested ``NodeKind`` holds when some *direct child*
  matches it, property matchers (``member``, ``objectType``, ``callee``)
  test the node itself, and ``hasDescendant`` looks at every strict descendant;
* ``allOf``/``anyOf``/``unless`` combine whatever their context evaluates.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from ..corpus import FunctionKey
from ..frontend import AstNode, SourceLocation, TranslationUnit
from .dsl import AllOf, AnyOf, Callee, HasDescendant, Matcher, Member, NodeKind, ObjectType, Unless

FILE_SCOPE = "<file-scope>"


@dataclass(frozen=True)
class Match:
    loc: SourceLocation
    end_loc: SourceLocation
    node_id: int
    enclosing_function: FunctionKey
    snippet: str
    line_text: str = ""

    @property
    def key(self) -> tuple[str, int]:
        return (self.loc.file, self.node_id)

    @property
    def sort_key(self) -> tuple[str, int, int, int]:
        return (self.loc.file, self.loc.line, self.loc.column, self.node_id)


@dataclass(frozen=True)
class MatchSet:
    matches: tuple[Match, ...] = ()
    known: frozenset[tuple[str, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        uniq = {m.key: m for m in self.matches}
        object.__setattr__(self, "matches", tuple(sorted(uniq.values(), key=lambda m: m.sort_key)))
        object.__setattr__(self, "known", frozenset(k for k in self.known if k in uniq))

    def __len__(self) -> int:
        return len(self.matches)

    def __iter__(self):
        return iter(self.matches)

    def is_known(self, match: Match) -> bool:
        return match.key in self.known

    def union(self, other: "MatchSet") -> "MatchSet":
        return MatchSet(self.matches + other.matches, self.known | other.known)

    def with_known(self, keys: Iterable[tuple[str, int]]) -> "MatchSet":
        return MatchSet(self.matches, self.known | frozenset(keys))


class _Evaluator:
    def __init__(self):
        self.cache: dict[tuple[int, int, bool], bool] = {}

    def top(self, node: AstNode, m: Matcher) -> bool:
        key = (id(m), id(node), True)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if isinstance(m, NodeKind):
            result = node.kind == m.ast_kind and _name_ok(node, m) and all(self.inner(node, i) for i in m.inner)
        elif isinstance(m, HasDescendant):
            result = self.has_descendant(node, m.inner)
        elif isinstance(m, AllOf):
            result = all(self.top(node, i) for i in m.items)
        elif isinstance(m, AnyOf):
            result = any(self.top(node, i) for i in m.items)
        elif isinstance(m, Unless):
            result = not self.top(node, m.inner)
        else:
            result = _property(node, m)
        self.cache[key] = result
        return result

    def inner(self, node: AstNode, m: Matcher) -> bool:
        if isinstance(m, NodeKind):
            return any(self.top(child, m) for child in node.children)
        if isinstance(m, HasDescendant):
            return self.has_descendant(node, m.inner)
        if isinstance(m, AllOf):
            return all(self.inner(node, i) for i in m.items)
        if isinstance(m, AnyOf):
            return any(self.inner(node, i) for i in m.items)
        if isinstance(m, Unless):
            return not self.inner(node, m.inner)
        return _property(node, m)

    def has_descendant(self, node: AstNode, m: Matcher) -> bool:
        key = (id(m), id(node), False)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        result = any(self.top(c, m) or self.has_descendant(c, m) for c in node.children)
        self.cache[key] = result
        return result


def _name_ok(node: AstNode, m: NodeKind) -> bool:
    if m.name is None:
        return True
    if m.kind == "binaryOperator":
        return node.op == m.name
    return node.name == m.name


def _property(node: AstNode, m: Matcher) -> bool:
    if isinstance(m, Member):
        return node.kind == "MemberExpr" and node.name == m.name
    if isinstance(m, ObjectType):
        return node.kind == "MemberExpr" and node.object_record == m.record_name
    if isinstance(m, Callee):
        return node.kind == "CallExpr" and node.name == m.name
    raise TypeError(f"not a property matcher: {m!r}")


def make_match(tu: TranslationUnit, node: AstNode) -> Match:
    fn = tu.enclosing_function(node)
    return Match(
        node.loc,
        node.end_loc,
        node.id,
        FunctionKey(tu.file, fn.name if fn is not None else FILE_SCOPE),
        tu.snippet(node),
        tu.line_text(node.loc.line),
    )


def matches_node(node: AstNode, m: Matcher) -> bool:
    return _Evaluator().top(node, m)


def _match_tu(tu: TranslationUnit, m: Matcher) -> list[Match]:
    ev = _Evaluator()
    return [make_match(tu, node) for node in tu.root.walk() if ev.top(node, m)]


def match_template(tus: Sequence[TranslationUnit], m: Matcher, jobs: int = 1) -> MatchSet:
    """Every node in ``tus`` satisfying ``m``, sorted by location."""
    if jobs > 1 and len(tus) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda tu: _match_tu(tu, m), tus))
    else:
        parts = [_match_tu(tu, m) for tu in tus]
    return MatchSet(tuple(x for part in parts for x in part))


def known_keys(matches: MatchSet, sites: Iterable[tuple[str, int, Optional[int]]]) -> set[tuple[str, int]]:
    """Keys of matches covering any ``(file, line, column-or-None)`` site."""
    out = set()
    for file, line, col in sites:
        for m in matches:
            if m.loc.file != file:
                continue
            if col is None:
                hit = m.loc.line <= line <= m.end_loc.line
            else:
                hit = m.loc.pos <= (line, col) <= m.end_loc.pos
            if hit:
                out.add(m.key)
    return out


def render_match_block(match: Match, number: int) -> str:
    """clang-query style block: header, note line, source line, caret."""
    caret = " " * (match.loc.column - 1) + "^"
    return (
        f"Match #{number}:\n"
        f'{match.loc}: note: "root" binds here\n'
        f"{match.line_text}\n"
        f"{caret}\n"
    )


def render_matches(matches: MatchSet) -> str:
    blocks = [render_match_block(m, i) for i, m in enumerate(matches, 1)]
    noun = "match" if len(matches) == 1 else "matches"
    return "\n".join(blocks) + ("\n" if blocks else "") + f"{len(matches)} {noun}.\n"
