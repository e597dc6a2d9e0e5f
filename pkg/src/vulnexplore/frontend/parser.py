"""Recursive-descent parser for MiniC.

Grammar (informal)::

    tu     := (record | func | global)*
    record := "struct" ident "{" (type ident ("[" int "]")? ";")* "}" ";"
    func   := type ident "(" params? ")" (compound | ";")
    stmt   := decl ";" | expr ";" | if | while | return | compound

Expressions follow C precedence: assignment, ``||``, ``&&``, ``|``, ``&``,
equality, relational, additive, multiplicative, unary/cast, postfix.
"""

from __future__ import annotations

from typing import Optional

from .ast import AstNode, ParseError, SourceLocation, Token, TranslationUnit, TypeRef

_TYPE_KEYWORDS = frozenset({"char", "short", "int", "unsigned", "long", "size_t", "void", "struct", "const"})

# binary operators by precedence level, loosest first
_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("|",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
)
_UNARY_OPS = frozenset({"-", "!", "~", "&", "*"})

_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34, "a": 7, "b": 8, "f": 12, "v": 11}


def decode_literal(body: str, loc: SourceLocation) -> bytes:
    """Decode the inside of a string or char literal into bytes."""
    out = bytearray()
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.extend(ch.encode("utf-8"))
            i += 1
            continue
        esc = body[i + 1] if i + 1 < len(body) else ""
        if esc == "x":
            j = i + 2
            while j < len(body) and j < i + 4 and body[j] in "0123456789abcdefABCDEF":
                j += 1
            if j == i + 2:
                raise ParseError(loc, "hex digits after \\x", body[i:])
            out.append(int(body[i + 2 : j], 16))
            i = j
        elif esc in _ESCAPES:
            out.append(_ESCAPES[esc])
            i += 2
        else:
            raise ParseError(loc, "a valid escape sequence", "\\" + esc)
    return bytes(out)


def _describe(tok: Token) -> str:
    return "end of file" if tok.kind == "eof" else tok.text


class Parser:
    def __init__(self, tokens: list[Token], file: str):
        if not tokens or tokens[-1].kind != "eof":
            raise ValueError("token stream must end with eof")
        self.toks = tokens
        self.pos = 0
        self.file = file

    # token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def prev_end(self) -> SourceLocation:
        return self.toks[self.pos - 1].end

    def error(self, expected: str) -> ParseError:
        return ParseError(self.tok.loc, expected, _describe(self.tok))

    def expect_punct(self, text: str) -> Token:
        if not self.tok.is_punct(text):
            raise self.error(repr(text))
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "identifier":
            raise self.error(what)
        return self.advance()

    def at_type(self, k: int = 0) -> bool:
        tok = self.peek(k) if k else self.tok
        return tok.kind == "keyword" and tok.text in _TYPE_KEYWORDS

    # types ---------------------------------------------------------------

    def parse_type(self) -> TypeRef:
        while self.tok.is_keyword("const"):
            self.advance()
        tok = self.tok
        if tok.is_keyword("struct"):
            self.advance()
            name = self.expect_ident("record name")
            base = TypeRef("record", f"struct {name.text}")
        elif tok.is_keyword("unsigned"):
            self.advance()
            # unsigned char/short/long keep their width; signedness is not modeled
            if self.tok.kind == "keyword" and self.tok.text in ("char", "short", "long"):
                base = TypeRef(self.advance().text)
            else:
                if self.tok.is_keyword("int"):
                    self.advance()
                base = TypeRef("unsigned")
        elif tok.is_keyword("long"):
            self.advance()
            if self.tok.is_keyword("int") or self.tok.is_keyword("long"):
                self.advance()
            base = TypeRef("long")
        elif tok.kind == "keyword" and tok.text in ("char", "short", "int", "size_t", "void"):
            self.advance()
            if tok.text == "short" and self.tok.is_keyword("int"):
                self.advance()
            base = TypeRef(tok.text)
        else:
            raise self.error("type name")
        depth = 0
        while True:
            if self.tok.is_keyword("const"):
                self.advance()
            elif self.tok.is_punct("*"):
                self.advance()
                depth += 1
            else:
                break
        return TypeRef(base.base, base.record_name, depth)

    def parse_array_suffix(self, t: TypeRef) -> TypeRef:
        if not self.tok.is_punct("["):
            return t
        self.advance()
        if self.tok.kind != "integer-literal":
            raise self.error("array length")
        length = int(self.advance().text, 0)
        if length < 1:
            raise ParseError(self.toks[self.pos - 1].loc, "positive array length", str(length))
        self.expect_punct("]")
        return TypeRef(t.base, t.record_name, t.pointer_depth, length)

    # top level -----------------------------------------------------------

    def parse_translation_unit(self, source: str) -> TranslationUnit:
        start = self.tok.loc
        children: list[AstNode] = []
        functions: dict[str, AstNode] = {}
        globals_: dict[str, AstNode] = {}
        records_seen: set[str] = set()
        while self.tok.kind != "eof":
            if self.tok.is_keyword("struct") and self.peek(2).is_punct("{"):
                node = self.parse_record()
                if node.name in records_seen:
                    raise ParseError(node.loc, "a new record name", node.name)
                records_seen.add(node.name)
                children.append(node)
                continue
            type_start = self.tok
            t = self.parse_type()
            name = self.expect_ident("declaration name")
            if self.tok.is_punct("("):
                fn = self.parse_function(type_start, t, name)
                children.append(fn)
                if len(fn.children) and fn.children[-1].kind == "CompoundStmt":
                    if fn.name in functions:
                        raise ParseError(name.loc, "a new function name", fn.name)
                    functions[fn.name] = fn
                continue
            decl = self.parse_declarators(type_start, t, name)
            for var in decl.children:
                if var.name in globals_:
                    raise ParseError(var.loc, "a new global name", var.name)
                globals_[var.name] = var
            children.extend(decl.children)
        end = self.tok.loc if not children else children[-1].end_loc
        root = AstNode("TranslationUnit", SourceLocation(self.file, 1, 1), max(end, start), children)
        tu = TranslationUnit(self.file, root, source, functions=functions, globals=globals_)
        _assign_ids(tu)
        return tu

    def parse_record(self) -> AstNode:
        start = self.advance()  # struct
        name = self.expect_ident("record name")
        self.expect_punct("{")
        fields: list[AstNode] = []
        seen: set[str] = set()
        while not self.tok.is_punct("}"):
            fstart = self.tok
            t = self.parse_type()
            fname = self.expect_ident("field name")
            t = self.parse_array_suffix(t)
            if fname.text in seen:
                raise ParseError(fname.loc, "a new field name", fname.text)
            seen.add(fname.text)
            fields.append(AstNode("FieldDecl", fstart.loc, self.prev_end(), name=fname.text, decl_type=t))
            self.expect_punct(";")
        self.expect_punct("}")
        self.expect_punct(";")
        return AstNode("RecordDecl", start.loc, self.prev_end(), fields, name=f"struct {name.text}")

    def parse_function(self, type_start: Token, ret: TypeRef, name: Token) -> AstNode:
        self.expect_punct("(")
        params: list[AstNode] = []
        if self.tok.is_keyword("void") and self.peek().is_punct(")"):
            self.advance()
        elif not self.tok.is_punct(")"):
            while True:
                pstart = self.tok
                t = self.parse_type()
                pname = self.expect_ident("parameter name")
                # array parameters decay to pointers, as in C
                t = self.parse_array_suffix(t).decayed()
                params.append(AstNode("ParamDecl", pstart.loc, self.prev_end(), name=pname.text, decl_type=t))
                if self.tok.is_punct(","):
                    self.advance()
                    continue
                break
        self.expect_punct(")")
        children = list(params)
        if self.tok.is_punct(";"):
            self.advance()
        else:
            if not self.tok.is_punct("{"):
                raise self.error("'{' or ';'")
            children.append(self.parse_compound())
        return AstNode("FunctionDecl", type_start.loc, self.prev_end(), children, name=name.text, decl_type=ret)

    def parse_declarators(self, type_start: Token, t: TypeRef, name: Token) -> AstNode:
        """Rest of a declaration after the first name; returns a DeclStmt."""
        vars_: list[AstNode] = []
        var_start = type_start.loc
        while True:
            vt = self.parse_array_suffix(t)
            init: list[AstNode] = []
            if self.tok.is_punct("="):
                self.advance()
                init.append(self.parse_assignment())
            vars_.append(AstNode("VarDecl", var_start, self.prev_end(), init, name=name.text, decl_type=vt))
            if not self.tok.is_punct(","):
                break
            self.advance()
            depth = 0
            while self.tok.is_punct("*"):
                self.advance()
                depth += 1
            t = TypeRef(t.base, t.record_name, depth)
            name = self.expect_ident("declaration name")
            var_start = name.loc
        self.expect_punct(";")
        return AstNode("DeclStmt", type_start.loc, self.prev_end(), vars_)

    # statements ------------------------------------------------------------

    def parse_compound(self) -> AstNode:
        start = self.expect_punct("{")
        body: list[AstNode] = []
        while not self.tok.is_punct("}"):
            if self.tok.kind == "eof":
                raise self.error("'}'")
            body.append(self.parse_statement())
        self.advance()
        return AstNode("CompoundStmt", start.loc, self.prev_end(), body)

    def parse_statement(self) -> AstNode:
        tok = self.tok
        if tok.is_punct("{"):
            return self.parse_compound()
        if tok.is_keyword("if"):
            self.advance()
            self.expect_punct("(")
            cond = self.parse_expression()
            self.expect_punct(")")
            children = [cond, self.parse_statement()]
            if self.tok.is_keyword("else"):
                self.advance()
                children.append(self.parse_statement())
            return AstNode("IfStmt", tok.loc, self.prev_end(), children)
        if tok.is_keyword("while"):
            self.advance()
            self.expect_punct("(")
            cond = self.parse_expression()
            self.expect_punct(")")
            body = self.parse_statement()
            return AstNode("WhileStmt", tok.loc, self.prev_end(), [cond, body])
        if tok.is_keyword("return"):
            self.advance()
            children = [] if self.tok.is_punct(";") else [self.parse_expression()]
            self.expect_punct(";")
            return AstNode("ReturnStmt", tok.loc, self.prev_end(), children)
        if self.at_type():
            t = self.parse_type()
            name = self.expect_ident("declaration name")
            return self.parse_declarators(tok, t, name)
        expr = self.parse_expression()
        self.expect_punct(";")
        return AstNode("ExprStmt", tok.loc, self.prev_end(), [expr])

    # expressions -------------------------------------------------------------

    def parse_expression(self) -> AstNode:
        return self.parse_assignment()

    def parse_assignment(self) -> AstNode:
        lhs = self.parse_binary(0)
        if self.tok.is_punct("="):
            op = self.advance()
            if lhs.kind not in ("DeclRefExpr", "MemberExpr", "ArraySubscriptExpr") and not (
                lhs.kind == "UnaryOperator" and lhs.op == "*"
            ):
                raise ParseError(op.loc, "assignable expression before '='", "=")
            rhs = self.parse_assignment()
            return AstNode("BinaryOperator", lhs.loc, rhs.end_loc, [lhs, rhs], op="=")
        return lhs

    def parse_binary(self, level: int) -> AstNode:
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        lhs = self.parse_binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "punctuator" and self.tok.text in ops:
            op = self.advance().text
            rhs = self.parse_binary(level + 1)
            lhs = AstNode("BinaryOperator", lhs.loc, rhs.end_loc, [lhs, rhs], op=op)
        return lhs

    def parse_unary(self) -> AstNode:
        tok = self.tok
        if tok.kind == "punctuator" and tok.text in _UNARY_OPS:
            self.advance()
            operand = self.parse_unary()
            return AstNode("UnaryOperator", tok.loc, operand.end_loc, [operand], op=tok.text)
        if tok.is_punct("(") and self.at_type(1):
            self.advance()
            t = self.parse_type()
            self.expect_punct(")")
            operand = self.parse_unary()
            return AstNode("CastExpr", tok.loc, operand.end_loc, [operand], decl_type=t)
        return self.parse_postfix()

    def parse_postfix(self) -> AstNode:
        node = self.parse_primary()
        while True:
            tok = self.tok
            if tok.is_punct("["):
                self.advance()
                index = self.parse_expression()
                self.expect_punct("]")
                node = AstNode("ArraySubscriptExpr", node.loc, self.prev_end(), [node, index])
            elif tok.is_punct("->") or tok.is_punct("."):
                self.advance()
                member = self.expect_ident("member name")
                node = AstNode(
                    "MemberExpr", node.loc, member.end, [node],
                    name=member.text, op=tok.text, member_loc=member.loc,
                )
            elif tok.is_punct("("):
                if node.kind != "DeclRefExpr":
                    raise ParseError(tok.loc, "direct call through a function name", "(")
                self.advance()
                args: list[AstNode] = []
                if not self.tok.is_punct(")"):
                    while True:
                        args.append(self.parse_assignment())
                        if not self.tok.is_punct(","):
                            break
                        self.advance()
                self.expect_punct(")")
                node = AstNode("CallExpr", node.loc, self.prev_end(), [node, *args], name=node.name)
            else:
                return node

    def parse_primary(self) -> AstNode:
        tok = self.tok
        if tok.kind == "identifier":
            self.advance()
            return AstNode("DeclRefExpr", tok.loc, tok.end, name=tok.text)
        if tok.kind == "integer-literal":
            self.advance()
            return AstNode("IntegerLiteral", tok.loc, tok.end, value=int(tok.text, 0))
        if tok.kind == "char-literal":
            self.advance()
            data = decode_literal(tok.text[1:-1], tok.loc)
            if len(data) != 1:
                raise ParseError(tok.loc, "single-byte char literal", tok.text)
            return AstNode("IntegerLiteral", tok.loc, tok.end, value=data[0])
        if tok.kind == "string-literal":
            self.advance()
            data = decode_literal(tok.text[1:-1], tok.loc)
            end = tok.end
            # adjacent literals concatenate
            while self.tok.kind == "string-literal":
                nxt = self.advance()
                data += decode_literal(nxt.text[1:-1], nxt.loc)
                end = nxt.end
            return AstNode("StringLiteral", tok.loc, end, value=data)
        if tok.is_punct("("):
            self.advance()
            inner = self.parse_expression()
            self.expect_punct(")")
            # parentheses do not get their own node; widen the range instead
            inner.loc, inner.end_loc = tok.loc, self.prev_end()
            return inner
        raise self.error("expression")


def _assign_ids(tu: TranslationUnit) -> None:
    for i, node in enumerate(tu.root.walk()):
        node.id = i
    tu.reindex()


def parse(tokens: list[Token], file: str, source: str = "") -> TranslationUnit:
    """Parse a macro-expanded token stream into a :class:`TranslationUnit`."""
    return Parser(tokens, file).parse_translation_unit(source)
