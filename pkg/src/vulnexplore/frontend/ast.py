"""Core data types for MiniC programs: locations, tokens, types and AST nodes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..errors import VulnExploreError


class FrontendError(VulnExploreError):
    module = "frontend"

    def __init__(self, loc: Optional["SourceLocation"], message: str):
        prefix = f"{loc}: " if loc is not None else ""
        super().__init__(prefix + message)
        self.loc = loc


class LexError(FrontendError):
    pass


class MacroError(FrontendError):
    pass


class ParseError(FrontendError):
    def __init__(self, loc: "SourceLocation", expected: str, found: str):
        super().__init__(loc, f"expected {expected}, found {found!r}")
        self.expected = expected
        self.found = found


class MiniCTypeError(FrontendError):
    """Type resolution failure (unknown record, unknown member, ...)."""


@dataclass(frozen=True, order=True)
class SourceLocation:
    file: str
    line: int
    column: int

    def __post_init__(self):
        if not self.file:
            raise ValueError("SourceLocation.file must be non-empty")
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid location {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.column)


TOKEN_KINDS = (
    "identifier",
    "keyword",
    "integer-literal",
    "string-literal",
    "char-literal",
    "punctuator",
    "eof",
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    loc: SourceLocation
    # location of the last character of the token in the original text
    end: SourceLocation
    # true for the first token on a source line; directives need it
    line_start: bool = False

    def is_punct(self, text: str) -> bool:
        return self.kind == "punctuator" and self.text == text

    def is_keyword(self, text: str) -> bool:
        return self.kind == "keyword" and self.text == text


BASE_SIZES = {
    "char": 1,
    "short": 2,
    "int": 4,
    "unsigned": 4,
    "long": 8,
    "size_t": 8,
    "void": 0,
}
POINTER_SIZE = 8


@dataclass(frozen=True)
class TypeRef:
    base: str
    record_name: Optional[str] = None
    pointer_depth: int = 0
    array_len: Optional[int] = None

    def __post_init__(self):
        if self.base != "record" and self.base not in BASE_SIZES:
            raise ValueError(f"unknown base type {self.base!r}")
        if (self.base == "record") != (self.record_name is not None):
            raise ValueError("record_name must be present iff base is 'record'")
        if self.pointer_depth < 0:
            raise ValueError("negative pointer depth")
        if self.array_len is not None and self.array_len < 1:
            raise ValueError("array length must be >= 1")

    def __str__(self) -> str:
        text = self.record_name if self.base == "record" else self.base
        text += "*" * self.pointer_depth
        if self.array_len is not None:
            text += f"[{self.array_len}]"
        return text

    @property
    def is_pointer(self) -> bool:
        return self.pointer_depth > 0 and self.array_len is None

    @property
    def is_array(self) -> bool:
        return self.array_len is not None

    @property
    def is_record(self) -> bool:
        return self.base == "record" and self.pointer_depth == 0 and self.array_len is None

    @property
    def is_scalar(self) -> bool:
        return not self.is_array and (self.pointer_depth > 0 or self.base not in ("record", "void"))

    def element(self) -> "TypeRef":
        """Element type of an array, or pointee of a pointer."""
        if self.array_len is not None:
            return TypeRef(self.base, self.record_name, self.pointer_depth)
        if self.pointer_depth > 0:
            return TypeRef(self.base, self.record_name, self.pointer_depth - 1)
        raise ValueError(f"{self} is neither array nor pointer")

    def pointer_to(self) -> "TypeRef":
        # &arr yields a pointer to the element type in this subset
        return TypeRef(self.base, self.record_name, self.pointer_depth + 1)

    def decayed(self) -> "TypeRef":
        return self.pointer_to() if self.array_len is not None else self

    def points_to_record(self, record_name: str) -> bool:
        return (
            self.base == "record"
            and self.record_name == record_name
            and self.pointer_depth >= 1
            and self.array_len is None
        )


INT = TypeRef("int")
LONG = TypeRef("long")
CHAR_PTR = TypeRef("char", pointer_depth=1)

NODE_KINDS = (
    "TranslationUnit",
    "FunctionDecl",
    "ParamDecl",
    "RecordDecl",
    "FieldDecl",
    "VarDecl",
    "DeclStmt",
    "CompoundStmt",
    "IfStmt",
    "WhileStmt",
    "ReturnStmt",
    "ExprStmt",
    "CallExpr",
    "MemberExpr",
    "ArraySubscriptExpr",
    "DeclRefExpr",
    "BinaryOperator",
    "UnaryOperator",
    "CastExpr",
    "IntegerLiteral",
    "StringLiteral",
)

STATEMENT_KINDS = frozenset(
    {"DeclStmt", "CompoundStmt", "IfStmt", "WhileStmt", "ReturnStmt", "ExprStmt"}
)
EXPRESSION_KINDS = frozenset(
    {
        "CallExpr",
        "MemberExpr",
        "ArraySubscriptExpr",
        "DeclRefExpr",
        "BinaryOperator",
        "UnaryOperator",
        "CastExpr",
        "IntegerLiteral",
        "StringLiteral",
    }
)


@dataclass(eq=False)
class AstNode:
    kind: str
    loc: SourceLocation
    end_loc: SourceLocation
    children: list["AstNode"] = field(default_factory=list)
    name: Optional[str] = None
    op: Optional[str] = None
    type_annot: Optional[TypeRef] = None
    id: int = -1
    # declared type for declarations and casts, set by the parser
    decl_type: Optional[TypeRef] = None
    # literal payload: int for IntegerLiteral, bytes for StringLiteral
    value: object = None
    # MemberExpr only: record of the accessed object, and the member-name position
    object_record: Optional[str] = None
    member_loc: Optional[SourceLocation] = None
    # DeclRefExpr only: the declaration node it resolves to (None for functions)
    ref: Optional["AstNode"] = None

    def __repr__(self) -> str:
        extra = f" {self.name!r}" if self.name else ""
        return f"<{self.kind}#{self.id}{extra} {self.loc}>"

    def walk(self) -> Iterator["AstNode"]:
        """Pre-order traversal including self."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def descendants(self) -> Iterator["AstNode"]:
        it = self.walk()
        next(it)
        return it

    def covers_line(self, line: int) -> bool:
        return self.loc.line <= line <= self.end_loc.line


@dataclass(frozen=True)
class FieldInfo:
    name: str
    type: TypeRef
    offset: int


@dataclass(eq=False)
class TranslationUnit:
    file: str
    root: AstNode
    source: str
    records: dict[str, list[FieldInfo]] = field(default_factory=dict)
    functions: dict[str, AstNode] = field(default_factory=dict)
    globals: dict[str, AstNode] = field(default_factory=dict)

    def __post_init__(self):
        self._lines = self.source.split("\n")
        self._by_id: dict[int, AstNode] = {}
        self._parent: dict[int, AstNode] = {}
        self.reindex()

    def reindex(self) -> None:
        self._by_id = {n.id: n for n in self.root.walk()}
        self._parent = {}
        for node in self.root.walk():
            for child in node.children:
                self._parent[child.id] = node

    def node(self, node_id: int) -> AstNode:
        return self._by_id[node_id]

    def parent(self, node: AstNode) -> Optional[AstNode]:
        return self._parent.get(node.id)

    def enclosing_function(self, node: AstNode) -> Optional[AstNode]:
        cur: Optional[AstNode] = node
        while cur is not None and cur.kind != "FunctionDecl":
            cur = self._parent.get(cur.id)
        return cur

    def function_at_line(self, line: int) -> Optional[AstNode]:
        for fn in self.functions.values():
            if fn.covers_line(line):
                return fn
        return None

    def line_text(self, line: int) -> str:
        if 1 <= line <= len(self._lines):
            return self._lines[line - 1].rstrip("\r")
        return ""

    def text_range(self, start: SourceLocation, end: SourceLocation) -> str:
        """Source text from ``start`` through ``end`` (inclusive)."""
        if start.line == end.line:
            return self.line_text(start.line)[start.column - 1 : end.column]
        parts = [self.line_text(start.line)[start.column - 1 :]]
        for line in range(start.line + 1, end.line):
            parts.append(self.line_text(line))
        parts.append(self.line_text(end.line)[: end.column])
        return "\n".join(parts)

    def snippet(self, node: AstNode) -> str:
        return self.text_range(node.loc, node.end_loc)

    def record_size(self, record_name: str) -> int:
        return sum(sizeof(f.type, self.records) for f in self.records[record_name])


def sizeof(t: TypeRef, records: dict[str, list[FieldInfo]]) -> int:
    if t.array_len is not None:
        return t.array_len * sizeof(t.element(), records)
    if t.pointer_depth > 0:
        return POINTER_SIZE
    if t.base == "record":
        try:
            fields = records[t.record_name]
        except KeyError:
            raise MiniCTypeError(None, f"unknown record {t.record_name!r}") from None
        return sum(sizeof(f.type, records) for f in fields)
    return BASE_SIZES[t.base]
