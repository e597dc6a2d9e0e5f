"""Matcher expressions and their clang-query-like textual form.

    matcher := name "(" (arg ("," arg)*)? ")"
    arg     := matcher | string-literal
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

from ..errors import VulnExploreError


class DslError(VulnExploreError):
    module = "templates"

    def __init__(self, offset: int, message: str):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


# DSL name -> AST node kind
NODE_MATCHERS = {
    "declStmt": "DeclStmt",
    "exprStmt": "ExprStmt",
    "returnStmt": "ReturnStmt",
    "ifStmt": "IfStmt",
    "callExpr": "CallExpr",
    "memberExpr": "MemberExpr",
    "binaryOperator": "BinaryOperator",
    "varDecl": "VarDecl",
    "declRefExpr": "DeclRefExpr",
}
KIND_TO_MATCHER = {v: k for k, v in NODE_MATCHERS.items()}

# node matchers that accept a leading string (name, or operator for binaryOperator)
NAMED_MATCHERS = frozenset({"callExpr", "memberExpr", "binaryOperator", "varDecl", "declRefExpr"})


@dataclass(frozen=True)
class NodeKind:
    kind: str
    name: Optional[str] = None
    inner: tuple["Matcher", ...] = ()

    @property
    def ast_kind(self) -> str:
        return NODE_MATCHERS[self.kind]


@dataclass(frozen=True)
class Member:
    name: str


@dataclass(frozen=True)
class ObjectType:
    record_name: str


@dataclass(frozen=True)
class Callee:
    name: str


@dataclass(frozen=True)
class HasDescendant:
    inner: "Matcher"


@dataclass(frozen=True)
class AllOf:
    items: tuple["Matcher", ...]


@dataclass(frozen=True)
class AnyOf:
    items: tuple["Matcher", ...]


@dataclass(frozen=True)
class Unless:
    inner: "Matcher"


Matcher = Union[NodeKind, Member, ObjectType, Callee, HasDescendant, AllOf, AnyOf, Unless]
MatcherExpr = Matcher

_PROPERTY_OWNER = {Member: "memberExpr", ObjectType: "memberExpr", Callee: "callExpr"}


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def render_matcher(m: Matcher) -> str:
    """Canonical single-line text; ``parse_matcher`` inverts it."""
    if isinstance(m, NodeKind):
        args = ([_quote(m.name)] if m.name is not None else []) + [render_matcher(i) for i in m.inner]
        return f"{m.kind}({', '.join(args)})"
    if isinstance(m, Member):
        return f"member({_quote(m.name)})"
    if isinstance(m, ObjectType):
        return f"objectType({_quote(m.record_name)})"
    if isinstance(m, Callee):
        return f"callee({_quote(m.name)})"
    if isinstance(m, HasDescendant):
        return f"hasDescendant({render_matcher(m.inner)})"
    if isinstance(m, Unless):
        return f"unless({render_matcher(m.inner)})"
    if isinstance(m, AllOf):
        return f"allOf({', '.join(render_matcher(i) for i in m.items)})"
    if isinstance(m, AnyOf):
        return f"anyOf({', '.join(render_matcher(i) for i in m.items)})"
    raise TypeError(f"not a matcher: {m!r}")


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.i = 0
        self.offsets: dict[int, int] = {}

    def skip_ws(self) -> None:
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            found = self.peek() or "end of input"
            raise DslError(self.i, f"expected {ch!r}, found {found!r}")
        self.i += 1

    def name(self) -> tuple[str, int]:
        self.skip_ws()
        start = self.i
        while self.i < len(self.text) and (self.text[self.i].isalnum() or self.text[self.i] == "_"):
            self.i += 1
        if start == self.i:
            found = self.text[start] if start < len(self.text) else "end of input"
            raise DslError(start, f"expected matcher name, found {found!r}")
        return self.text[start : self.i], start

    def string(self) -> str:
        self.skip_ws()
        start = self.i
        j = self.i + 1
        while j < len(self.text):
            ch = self.text[j]
            if ch == "\\":
                j += 2
                continue
            if ch == '"':
                break
            j += 1
        else:
            raise DslError(start, "unterminated string literal")
        try:
            value = json.loads(self.text[start : j + 1])
        except json.JSONDecodeError:
            raise DslError(start, "invalid string literal") from None
        self.i = j + 1
        return value


def _parse(r: _Reader) -> Matcher:
    name, at = r.name()
    r.expect("(")
    args: list[tuple[int, Union[str, Matcher]]] = []
    if r.peek() != ")":
        while True:
            r.skip_ws()
            pos = r.i
            args.append((pos, r.string() if r.peek() == '"' else _parse(r)))
            if r.peek() == ",":
                r.i += 1
                continue
            break
    r.expect(")")
    m = _build(name, at, args)
    r.offsets[id(m)] = at
    return m


def _build(name: str, at: int, args: list[tuple[int, Union[str, Matcher]]]) -> Matcher:
    strings = [(p, a) for p, a in args if isinstance(a, str)]
    matchers = [a for _, a in args if not isinstance(a, str)]
    if name in NODE_MATCHERS:
        if strings and name not in NAMED_MATCHERS:
            raise DslError(strings[0][0], f"{name} does not take a string argument")
        if len(strings) > 1 or (strings and not isinstance(args[0][1], str)):
            raise DslError(strings[-1][0], f"{name} takes at most one leading string argument")
        return NodeKind(name, strings[0][1] if strings else None, tuple(matchers))
    if name in ("member", "objectType", "callee"):
        if len(args) != 1 or not isinstance(args[0][1], str):
            raise DslError(at, f"{name} takes exactly one string argument")
        value = args[0][1]
        return {"member": Member, "objectType": ObjectType, "callee": Callee}[name](value)
    if name in ("hasDescendant", "unless"):
        if len(args) != 1 or isinstance(args[0][1], str):
            raise DslError(at, f"{name} takes exactly one matcher argument")
        return (HasDescendant if name == "hasDescendant" else Unless)(args[0][1])
    if name in ("allOf", "anyOf"):
        if strings or not matchers:
            raise DslError(at, f"{name} takes one or more matcher arguments")
        return (AllOf if name == "allOf" else AnyOf)(tuple(matchers))
    raise DslError(at, f"unknown matcher {name!r}")


def validate(m: Matcher, owner: Optional[str] = None, offsets: Optional[dict[int, int]] = None) -> None:
    """Check that property matchers sit beneath the node matcher they refine.

    Combinators are transparent; ``hasDescendant`` starts a fresh context.
    """
    offsets = offsets or {}
    if isinstance(m, NodeKind):
        for i in m.inner:
            validate(i, m.kind, offsets)
    elif type(m) in _PROPERTY_OWNER:
        need = _PROPERTY_OWNER[type(m)]
        if owner != need:
            where = f"under {owner}()" if owner else "at top level"
            raise DslError(offsets.get(id(m), 0), f"{render_matcher(m)} must sit beneath {need}(), not {where}")
    elif isinstance(m, HasDescendant):
        validate(m.inner, None, offsets)
    elif isinstance(m, Unless):
        validate(m.inner, owner, offsets)
    elif isinstance(m, (AllOf, AnyOf)):
        for i in m.items:
            validate(i, owner, offsets)
    else:
        raise TypeError(f"not a matcher: {m!r}")


def parse_matcher(text: str) -> Matcher:
    r = _Reader(text)
    m = _parse(r)
    r.skip_ws()
    if r.i != len(text):
        raise DslError(r.i, f"trailing input {text[r.i:]!r}")
    validate(m, None, r.offsets)
    return m
