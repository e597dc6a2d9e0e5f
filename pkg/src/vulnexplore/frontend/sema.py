"""Type resolution: record layouts, declaration references and expression types."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .ast import (
    INT,
    LONG,
    AstNode,
    FieldInfo,
    MiniCTypeError,
    TranslationUnit,
    TypeRef,
    sizeof,
)

BUILTIN_RETURN_TYPES = {
    "abort": TypeRef("void"),
    "assert": TypeRef("void"),
    "input_eq": INT,
    "hash_eq": INT,
    "memcpy": TypeRef("void", pointer_depth=1),
    "strcpy": TypeRef("char", pointer_depth=1),
}

_COMPARISON_OPS = frozenset({"==", "!=", "<", "<=", ">", ">=", "&&", "||"})


def _layout(record: AstNode, records: dict[str, list[FieldInfo]]) -> list[FieldInfo]:
    fields: list[FieldInfo] = []
    offset = 0
    for f in record.children:
        t = f.decl_type
        if t.base == "record" and t.pointer_depth == 0 and t.record_name not in records:
            if t.record_name == record.name:
                raise MiniCTypeError(f.loc, f"record {record.name!r} contains itself")
            raise MiniCTypeError(f.loc, f"unknown record {t.record_name!r}")
        f.type_annot = t
        fields.append(FieldInfo(f.name, t, offset))
        offset += sizeof(t, records)
    return fields


def _arith_type(a: Optional[TypeRef], b: Optional[TypeRef]) -> TypeRef:
    best = INT
    for t in (a, b):
        if t is not None and t.is_scalar and t.pointer_depth == 0 and sizeof(t, {}) > sizeof(best, {}):
            best = t
    return best


class _Resolver:
    def __init__(self, tu: TranslationUnit, includes: Sequence[TranslationUnit]):
        self.tu = tu
        self.records: dict[str, list[FieldInfo]] = {}
        for inc in includes:
            if not inc.records:
                for child in inc.root.children:
                    if child.kind == "RecordDecl":
                        inc.records[child.name] = _layout(child, {**self.records, **inc.records})
            self.records.update(inc.records)
        self.signatures: dict[str, TypeRef] = {}
        self.globals: dict[str, AstNode] = {}
        for inc in includes:
            self.globals.update(inc.globals)
            for child in inc.root.children:
                if child.kind == "FunctionDecl":
                    self.signatures[child.name] = child.decl_type
        self.globals.update(tu.globals)
        self.scopes: list[dict[str, AstNode]] = []

    def run(self) -> None:
        tu = self.tu
        for child in tu.root.children:
            if child.kind == "RecordDecl":
                tu.records[child.name] = _layout(child, {**self.records, **tu.records})
        self.records.update(tu.records)
        for child in tu.root.children:
            if child.kind == "FunctionDecl":
                self.signatures[child.name] = child.decl_type
        for child in tu.root.children:
            if child.kind == "VarDecl":
                self.check_decl_type(child)
                child.type_annot = child.decl_type
                for init in child.children:
                    self.expr(init)
            elif child.kind == "FunctionDecl":
                self.function(child)

    def check_decl_type(self, decl: AstNode) -> None:
        t = decl.decl_type
        if t.base == "record" and t.pointer_depth == 0 and t.record_name not in self.records:
            raise MiniCTypeError(decl.loc, f"unknown record {t.record_name!r}")
        if t.base == "void" and t.pointer_depth == 0 and decl.kind != "FunctionDecl":
            raise MiniCTypeError(decl.loc, f"variable {decl.name!r} declared void")

    def lookup(self, name: str) -> Optional[AstNode]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return self.globals.get(name)

    def declare(self, decl: AstNode) -> None:
        scope = self.scopes[-1]
        if decl.name in scope:
            raise MiniCTypeError(decl.loc, f"redeclaration of {decl.name!r}")
        scope[decl.name] = decl

    def function(self, fn: AstNode) -> None:
        fn.type_annot = fn.decl_type
        self.scopes.append({})
        for child in fn.children:
            if child.kind == "ParamDecl":
                self.check_decl_type(child)
                child.type_annot = child.decl_type
                self.declare(child)
            else:
                self.stmt(child)
        self.scopes.pop()

    def stmt(self, node: AstNode) -> None:
        kind = node.kind
        if kind == "CompoundStmt":
            self.scopes.append({})
            for child in node.children:
                self.stmt(child)
            self.scopes.pop()
        elif kind == "DeclStmt":
            for var in node.children:
                self.check_decl_type(var)
                var.type_annot = var.decl_type
                for init in var.children:
                    self.expr(init)
                self.declare(var)
        elif kind in ("IfStmt", "WhileStmt"):
            self.expr(node.children[0])
            for child in node.children[1:]:
                # a lone declaration as branch body still gets its own scope
                self.scopes.append({})
                self.stmt(child)
                self.scopes.pop()
        elif kind in ("ReturnStmt", "ExprStmt"):
            for child in node.children:
                self.expr(child)
        else:
            raise MiniCTypeError(node.loc, f"unexpected statement {kind}")

    def expr(self, node: AstNode) -> Optional[TypeRef]:
        t = self._expr(node)
        node.type_annot = t
        return t

    def _expr(self, node: AstNode) -> Optional[TypeRef]:
        kind = node.kind
        if kind == "IntegerLiteral":
            return INT if node.value < 2**31 else LONG
        if kind == "StringLiteral":
            return TypeRef("char", array_len=len(node.value) + 1)
        if kind == "DeclRefExpr":
            decl = self.lookup(node.name)
            if decl is None:
                raise MiniCTypeError(node.loc, f"unknown identifier {node.name!r}")
            node.ref = decl
            return decl.decl_type
        if kind == "CallExpr":
            for arg in node.children[1:]:
                self.expr(arg)
            if node.name in self.signatures:
                return self.signatures[node.name]
            return BUILTIN_RETURN_TYPES.get(node.name, INT)
        if kind == "MemberExpr":
            return self.member(node)
        if kind == "ArraySubscriptExpr":
            base = self.expr(node.children[0])
            self.expr(node.children[1])
            if base is None or not (base.is_array or base.is_pointer):
                raise MiniCTypeError(node.loc, f"subscript of non-pointer type {base}")
            return base.element()
        if kind == "UnaryOperator":
            t = self.expr(node.children[0])
            op = node.op
            if op == "&":
                return t.pointer_to()
            if op == "*":
                if t is None or not (t.is_pointer or t.is_array):
                    raise MiniCTypeError(node.loc, f"dereference of non-pointer type {t}")
                return t.element()
            if op == "!":
                return INT
            return _arith_type(t, None)
        if kind == "BinaryOperator":
            lhs = self.expr(node.children[0])
            rhs = self.expr(node.children[1])
            op = node.op
            if op == "=":
                return lhs
            if op in _COMPARISON_OPS:
                return INT
            lptr = lhs is not None and (lhs.is_pointer or lhs.is_array)
            rptr = rhs is not None and (rhs.is_pointer or rhs.is_array)
            if op == "-" and lptr and rptr:
                return LONG
            if op in ("+", "-") and lptr:
                return lhs.decayed()
            if op == "+" and rptr:
                return rhs.decayed()
            return _arith_type(lhs, rhs)
        if kind == "CastExpr":
            self.expr(node.children[0])
            return node.decl_type
        raise MiniCTypeError(node.loc, f"unexpected expression {kind}")

    def member(self, node: AstNode) -> TypeRef:
        obj = self.expr(node.children[0])
        if node.op == "->":
            ok = obj is not None and obj.base == "record" and obj.pointer_depth == 1 and obj.array_len is None
        else:
            ok = obj is not None and obj.is_record
        if not ok:
            raise MiniCTypeError(node.loc, f"member access {node.op}{node.name} on non-record type {obj}")
        fields = self.records.get(obj.record_name)
        if fields is None:
            raise MiniCTypeError(node.loc, f"unknown record {obj.record_name!r}")
        for f in fields:
            if f.name == node.name:
                node.object_record = obj.record_name
                return f.type
        raise MiniCTypeError(node.member_loc or node.loc, f"{obj.record_name!r} has no member {node.name!r}")


def resolve_types(tu: TranslationUnit, includes: Iterable[TranslationUnit] = ()) -> TranslationUnit:
    """Annotate ``tu`` in place with types; ``includes`` supply records, globals and signatures."""
    _Resolver(tu, [i for i in includes if i is not tu]).run()
    return tu
