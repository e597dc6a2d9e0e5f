"""Tree-walking MiniC interpreter with line coverage and sanitizer-style crash reports.

Memory is a set of byte blocks (the input buffer, one block per variable,
one per string literal).  Pointers carry their block and byte offset, so a
pointer cast from ``&buf[k]`` keeps pointing into the input buffer and every
load or store through it is checked against that buffer's length.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

from .corpus import ExecutionSlice, FunctionKey
from .errors import VulnExploreError
from .frontend import AstNode, SourceLocation, TranslationUnit, TypeRef, sizeof
from .frontend.ast import FieldInfo

STATEMENT_BUDGET = 1_000_000
MAX_CALL_DEPTH = 200

CRASH_KINDS = ("abort", "assertion-failure", "buffer-overflow-read", "buffer-overflow-write")
BUILTINS = frozenset({"abort", "assert", "input_eq", "hash_eq", "memcpy", "strcpy"})

_MASK64 = (1 << 64) - 1
_SIGNED_LOADS = frozenset({"int", "long", "size_t"})


class InterpError(VulnExploreError):
    module = "interp"


class RuntimeLimit(InterpError):
    pass


class UndefinedName(InterpError):
    pass


@dataclass(frozen=True)
class Frame:
    function: str
    file: str
    line: int
    column: int


@dataclass(frozen=True)
class CrashReport:
    kind: str
    site: SourceLocation
    stack: tuple[Frame, ...]

    def __post_init__(self):
        if self.kind not in CRASH_KINDS:
            raise ValueError(f"unknown crash kind {self.kind!r}")
        object.__setattr__(self, "stack", tuple(self.stack))
        if not self.stack:
            raise ValueError("crash stack must be non-empty")

    @property
    def top(self) -> Frame:
        return self.stack[0]

    @property
    def is_overflow(self) -> bool:
        return self.kind.startswith("buffer-overflow")


@dataclass(frozen=True)
class RunResult:
    exit_code: Optional[int]
    crash: Optional[CrashReport]
    slice: ExecutionSlice
    functions: frozenset[FunctionKey]

    @property
    def crashed(self) -> bool:
        return self.crash is not None


def wrap64(v: int) -> int:
    v &= _MASK64
    return v - (1 << 64) if v >> 63 else v


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & _MASK64
    return h


class Pointer(NamedTuple):
    block: Optional[int]
    offset: int
    pointee: TypeRef

    @property
    def is_null(self) -> bool:
        return self.block is None and self.offset == 0


@dataclass
class _Block:
    data: bytearray
    ptrs: dict[int, Pointer] = field(default_factory=dict)


class _Crash(Exception):
    def __init__(self, kind: str, site: SourceLocation):
        self.kind = kind
        self.site = site


class _Return(Exception):
    def __init__(self, value):
        self.value = value


@dataclass
class _Frame:
    fn: AstNode
    file: str
    vars: dict[int, int] = field(default_factory=dict)
    pos: Optional[SourceLocation] = None


class _Machine:
    def __init__(self, tus: Sequence[TranslationUnit], data: bytes, budget: int):
        self.functions: dict[str, tuple[TranslationUnit, AstNode]] = {}
        self.records: dict[str, list[FieldInfo]] = {}
        for tu in reversed(tus):
            self.records.update(tu.records)
            for name, fn in tu.functions.items():
                self.functions[name] = (tu, fn)
        self.blocks: list[_Block] = []
        self.input_block = self.alloc(len(data))
        self.blocks[self.input_block].data[:] = data
        self.globals: dict[int, int] = {}
        self.literals: dict[int, int] = {}
        self.lines: set[tuple[str, int]] = set()
        self.entered: set[FunctionKey] = set()
        self.frames: list[_Frame] = []
        self.budget = budget
        self.steps = 0
        self._global_tus = tus

    # memory --------------------------------------------------------------

    def alloc(self, size: int) -> int:
        self.blocks.append(_Block(bytearray(size)))
        return len(self.blocks) - 1

    def sizeof(self, t: TypeRef) -> int:
        return sizeof(t, self.records)

    def check(self, block: Optional[int], offset: int, size: int, kind: str, site: SourceLocation) -> _Block:
        if block is None:
            raise _Crash(kind, site)
        blk = self.blocks[block]
        if offset < 0 or offset + size > len(blk.data):
            raise _Crash(kind, site)
        return blk

    def load(self, block: Optional[int], offset: int, t: TypeRef, site: SourceLocation):
        if t.is_array:
            return Pointer(block, offset, t.element())
        if t.base == "record" and t.pointer_depth == 0:
            raise InterpError(f"{site}: record values cannot be used directly")
        size = self.sizeof(t)
        blk = self.check(block, offset, size, "buffer-overflow-read", site)
        if t.pointer_depth:
            ptr = blk.ptrs.get(offset)
            if ptr is not None:
                return Pointer(ptr.block, ptr.offset, t.element())
            raw = int.from_bytes(blk.data[offset : offset + size], "little")
            return Pointer(None, raw, t.element())
        signed = t.base in _SIGNED_LOADS
        return int.from_bytes(blk.data[offset : offset + size], "little", signed=signed)

    def store(self, block: Optional[int], offset: int, t: TypeRef, value, site: SourceLocation) -> None:
        if t.is_array or (t.base == "record" and t.pointer_depth == 0):
            raise InterpError(f"{site}: cannot assign to {t}")
        size = self.sizeof(t)
        blk = self.check(block, offset, size, "buffer-overflow-write", site)
        for off in [o for o in blk.ptrs if offset - 7 <= o < offset + size]:
            del blk.ptrs[off]
        if t.pointer_depth:
            ptr = value if isinstance(value, Pointer) else Pointer(None, value, t.element())
            blk.data[offset : offset + size] = bytes(size)
            if ptr.block is not None:
                blk.ptrs[offset] = ptr
            else:
                blk.data[offset : offset + size] = (ptr.offset & _MASK64).to_bytes(size, "little")
            return
        v = value.offset if isinstance(value, Pointer) else value
        blk.data[offset : offset + size] = (v & ((1 << (8 * size)) - 1)).to_bytes(size, "little")

    def read_bytes(self, ptr: Pointer, n: int, site: SourceLocation) -> bytes:
        if n < 0:
            raise _Crash("buffer-overflow-read", site)
        blk = self.check(ptr.block, ptr.offset, n, "buffer-overflow-read", site)
        return bytes(blk.data[ptr.offset : ptr.offset + n])

    def write_bytes(self, ptr: Pointer, data: bytes, site: SourceLocation) -> None:
        blk = self.check(ptr.block, ptr.offset, len(data), "buffer-overflow-write", site)
        blk.data[ptr.offset : ptr.offset + len(data)] = data

    # execution -----------------------------------------------------------

    def mark(self, node: AstNode) -> None:
        self.lines.add((node.loc.file, node.loc.line))
        if node.member_loc is not None:
            self.lines.add((node.member_loc.file, node.member_loc.line))

    def tick(self, node: AstNode) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise RuntimeLimit(f"statement budget of {self.budget} exceeded at {node.loc}")
        self.mark(node)

    def init_globals(self) -> None:
        for tu in self._global_tus:
            for node in tu.root.children:
                if node.kind != "VarDecl":
                    continue
                b = self.alloc(self.sizeof(node.decl_type))
                self.globals[id(node)] = b
        for tu in self._global_tus:
            for node in tu.root.children:
                if node.kind == "VarDecl" and node.children:
                    value = self.eval(node.children[0])
                    self.store(self.globals[id(node)], 0, node.decl_type, value, node.loc)

    def call(self, name: str, args: list, site: SourceLocation):
        target = self.functions.get(name)
        if target is None:
            raise UndefinedName(f"{site}: call to undefined function {name!r}")
        tu, fn = target
        params = [c for c in fn.children if c.kind == "ParamDecl"]
        if len(params) != len(args):
            raise InterpError(f"{site}: {name} expects {len(params)} arguments, got {len(args)}")
        if len(self.frames) >= MAX_CALL_DEPTH:
            raise RuntimeLimit(f"{site}: call depth limit of {MAX_CALL_DEPTH} exceeded")
        frame = _Frame(fn, tu.file)
        for p, a in zip(params, args):
            b = self.alloc(self.sizeof(p.decl_type))
            self.store(b, 0, p.decl_type, a, p.loc)
            frame.vars[id(p)] = b
        self.frames.append(frame)
        self.entered.add(FunctionKey(tu.file, name))
        self.mark(fn)
        value = None
        try:
            self.exec(fn.children[-1])
        except _Return as ret:
            value = ret.value
        self.frames.pop()
        ret_t = fn.decl_type
        if value is None or (ret_t.base == "void" and ret_t.pointer_depth == 0):
            return 0
        return self.convert(value, ret_t)

    def convert(self, value, t: TypeRef):
        if t.pointer_depth and not t.is_array:
            if isinstance(value, Pointer):
                return Pointer(value.block, value.offset, t.element())
            return Pointer(None, value, t.element())
        v = value.offset if isinstance(value, Pointer) else value
        if t.base in ("void", "record") or t.is_array:
            return v
        size = self.sizeof(t)
        v &= (1 << (8 * size)) - 1
        if t.base in _SIGNED_LOADS and v >> (8 * size - 1):
            v -= 1 << (8 * size)
        return v

    def exec(self, node: AstNode) -> None:
        kind = node.kind
        if kind == "CompoundStmt":
            for child in node.children:
                self.exec(child)
            return
        self.tick(node)
        frame = self.frames[-1]
        if kind == "ExprStmt":
            self.eval(node.children[0])
        elif kind == "DeclStmt":
            for var in node.children:
                b = self.alloc(self.sizeof(var.decl_type))
                frame.vars[id(var)] = b
                if var.children:
                    self.store(b, 0, var.decl_type, self.eval(var.children[0]), var.loc)
        elif kind == "IfStmt":
            if self.truthy(self.eval(node.children[0])):
                self.exec(node.children[1])
            elif len(node.children) > 2:
                self.exec(node.children[2])
        elif kind == "WhileStmt":
            while self.truthy(self.eval(node.children[0])):
                self.exec(node.children[1])
                self.tick(node)
        elif kind == "ReturnStmt":
            raise _Return(self.eval(node.children[0]) if node.children else None)
        else:
            raise InterpError(f"{node.loc}: cannot execute {kind}")

    @staticmethod
    def truthy(value) -> bool:
        if isinstance(value, Pointer):
            return not value.is_null
        return value != 0

    def lvalue(self, node: AstNode) -> tuple[Optional[int], int, TypeRef]:
        kind = node.kind
        self.mark(node)
        if kind == "DeclRefExpr":
            decl = node.ref
            key = id(decl)
            frame = self.frames[-1] if self.frames else None
            if frame is not None and key in frame.vars:
                return frame.vars[key], 0, decl.decl_type
            if key in self.globals:
                return self.globals[key], 0, decl.decl_type
            raise UndefinedName(f"{node.loc}: {node.name!r} has no storage")
        if kind == "MemberExpr":
            field_info = self.field(node)
            if node.op == "->":
                ptr = self.eval(node.children[0])
                return ptr.block, ptr.offset + field_info.offset, field_info.type
            block, offset, _ = self.lvalue(node.children[0])
            return block, offset + field_info.offset, field_info.type
        if kind == "ArraySubscriptExpr":
            base = self.eval(node.children[0])
            index = self.eval(node.children[1])
            if isinstance(index, Pointer):
                index = index.offset
            elem = node.type_annot
            return base.block, base.offset + index * self.sizeof(elem), elem
        if kind == "UnaryOperator" and node.op == "*":
            ptr = self.eval(node.children[0])
            return ptr.block, ptr.offset, node.type_annot
        raise InterpError(f"{node.loc}: {kind} is not assignable")

    def field(self, node: AstNode) -> FieldInfo:
        for f in self.records[node.object_record]:
            if f.name == node.name:
                return f
        raise InterpError(f"{node.loc}: unknown member {node.name!r}")

    def access_site(self, node: AstNode) -> SourceLocation:
        return node.member_loc if node.kind == "MemberExpr" else node.loc

    def eval(self, node: AstNode):
        kind = node.kind
        self.mark(node)
        if kind == "IntegerLiteral":
            return node.value
        if kind == "StringLiteral":
            b = self.literals.get(id(node))
            if b is None:
                b = self.alloc(len(node.value) + 1)
                self.blocks[b].data[: len(node.value)] = node.value
                self.literals[id(node)] = b
            return Pointer(b, 0, TypeRef("char"))
        if kind in ("DeclRefExpr", "MemberExpr", "ArraySubscriptExpr"):
            block, offset, t = self.lvalue(node)
            return self.load(block, offset, t, self.access_site(node))
        if kind == "UnaryOperator":
            op = node.op
            if op == "&":
                block, offset, t = self.lvalue(node.children[0])
                return Pointer(block, offset, t.element() if t.is_array else t)
            if op == "*":
                block, offset, t = self.lvalue(node)
                return self.load(block, offset, t, node.loc)
            v = self.eval(node.children[0])
            if op == "!":
                return 0 if self.truthy(v) else 1
            v = v.offset if isinstance(v, Pointer) else v
            return wrap64(-v) if op == "-" else wrap64(~v)
        if kind == "BinaryOperator":
            return self.binary(node)
        if kind == "CastExpr":
            return self.convert(self.eval(node.children[0]), node.decl_type)
        if kind == "CallExpr":
            return self.eval_call(node)
        raise InterpError(f"{node.loc}: cannot evaluate {kind}")

    def binary(self, node: AstNode):
        op = node.op
        lhs_node, rhs_node = node.children
        if op == "=":
            block, offset, t = self.lvalue(lhs_node)
            value = self.convert(self.eval(rhs_node), t)
            self.store(block, offset, t, value, self.access_site(lhs_node))
            return value
        if op == "&&":
            return 1 if self.truthy(self.eval(lhs_node)) and self.truthy(self.eval(rhs_node)) else 0
        if op == "||":
            return 1 if self.truthy(self.eval(lhs_node)) or self.truthy(self.eval(rhs_node)) else 0
        a = self.eval(lhs_node)
        b = self.eval(rhs_node)
        if isinstance(a, Pointer) or isinstance(b, Pointer):
            return self.pointer_binary(op, a, b, node)
        if op == "+":
            return wrap64(a + b)
        if op == "-":
            return wrap64(a - b)
        if op == "*":
            return wrap64(a * b)
        if op in ("/", "%"):
            if b == 0:
                raise InterpError(f"{node.loc}: division by zero")
            q = abs(a) // abs(b)
            if (a < 0) != (b < 0):
                q = -q
            return wrap64(q) if op == "/" else wrap64(a - q * b)
        if op == "&":
            return wrap64(a & b)
        if op == "|":
            return wrap64(a | b)
        return int(_compare(op, a, b))

    def pointer_binary(self, op: str, a, b, node: AstNode):
        if op in ("+", "-") and isinstance(a, Pointer) and not isinstance(b, Pointer):
            step = self.sizeof(a.pointee) or 1
            delta = b * step if op == "+" else -b * step
            return Pointer(a.block, a.offset + delta, a.pointee)
        if op == "+" and isinstance(b, Pointer) and not isinstance(a, Pointer):
            step = self.sizeof(b.pointee) or 1
            return Pointer(b.block, b.offset + a * step, b.pointee)
        if op == "-" and isinstance(a, Pointer) and isinstance(b, Pointer):
            step = self.sizeof(a.pointee) or 1
            return (a.offset - b.offset) // step
        key_a = (a.block if isinstance(a, Pointer) else None, a.offset if isinstance(a, Pointer) else a)
        key_b = (b.block if isinstance(b, Pointer) else None, b.offset if isinstance(b, Pointer) else b)
        if op == "==":
            return int(key_a == key_b)
        if op == "!=":
            return int(key_a != key_b)
        if op in ("<", "<=", ">", ">="):
            return int(_compare(op, key_a[1], key_b[1]))
        raise InterpError(f"{node.loc}: unsupported pointer operation {op!r}")

    def eval_call(self, node: AstNode):
        name = node.name
        arg_nodes = node.children[1:]
        site = node.loc
        if name in BUILTINS and name not in self.functions:
            return self.builtin(name, arg_nodes, site)
        args = [self.eval(a) for a in arg_nodes]
        self.frames[-1].pos = site
        return self.call(name, args, site)

    def builtin(self, name: str, arg_nodes: list[AstNode], site: SourceLocation):
        if name == "abort":
            raise _Crash("abort", site)
        if name == "assert":
            if not self.truthy(self.eval(arg_nodes[0])):
                raise _Crash("assertion-failure", site)
            return 0
        if name in ("input_eq", "hash_eq"):
            if len(arg_nodes) != 3 or arg_nodes[2].kind != "StringLiteral":
                raise InterpError(f"{site}: {name} expects (pointer, length, string-literal)")
            ptr = self.eval(arg_nodes[0])
            n = self.eval(arg_nodes[1])
            literal: bytes = arg_nodes[2].value
            self.mark(arg_nodes[2])
            if name == "input_eq":
                if n != len(literal):
                    return 0
                return int(self.read_bytes(ptr, n, site) == literal)
            try:
                wanted = int(literal.decode("ascii"), 16)
            except ValueError:
                raise InterpError(f"{site}: hash_eq literal must be hexadecimal") from None
            return int(fnv1a64(self.read_bytes(ptr, n, site)) == wanted)
        if name == "memcpy":
            dst, src, n = (self.eval(a) for a in arg_nodes)
            data = self.read_bytes(src, n, site)
            self.write_bytes(dst, data, site)
            return dst
        if name == "strcpy":
            dst, src = (self.eval(a) for a in arg_nodes)
            blk = self.check(src.block, src.offset, 0, "buffer-overflow-read", site)
            end = blk.data.find(0, src.offset) if src.offset >= 0 else -1
            if end < 0:
                raise _Crash("buffer-overflow-read", site)
            self.write_bytes(dst, bytes(blk.data[src.offset : end + 1]), site)
            return dst
        raise UndefinedName(f"{site}: unknown builtin {name!r}")

    def crash_report(self, crash: _Crash) -> CrashReport:
        frames = []
        for i, fr in enumerate(reversed(self.frames)):
            loc = crash.site if i == 0 else fr.pos
            frames.append(Frame(fr.fn.name, fr.file, loc.line, loc.column))
        return CrashReport(crash.kind, crash.site, tuple(frames))


def _compare(op: str, a: int, b: int) -> bool:
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(op)


def _check_entry(fn: AstNode) -> None:
    params = [c for c in fn.children if c.kind == "ParamDecl"]
    ok = (
        len(params) == 2
        and params[0].decl_type.base == "char"
        and params[0].decl_type.is_pointer
        and params[0].decl_type.pointer_depth == 1
        and params[1].decl_type.is_scalar
        and params[1].decl_type.pointer_depth == 0
    )
    if not ok:
        raise InterpError(f"{fn.loc}: entry {fn.name!r} must take (char *buf, size_t len)")


def execute(
    tu: TranslationUnit,
    extra_tus: Sequence[TranslationUnit],
    input: bytes,
    entry: str,
    budget: int = STATEMENT_BUDGET,
) -> RunResult:
    """Run ``entry(buf, len)`` on ``input`` and record what executed."""
    tus = [tu, *[t for t in extra_tus if t is not tu]]
    machine = _Machine(tus, bytes(input), budget)
    if entry not in machine.functions:
        raise UndefinedName(f"entry function {entry!r} not found")
    _check_entry(machine.functions[entry][1])
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20 * MAX_CALL_DEPTH + 1000))
    exit_code: Optional[int] = None
    crash: Optional[CrashReport] = None
    try:
        machine.init_globals()
        buf = Pointer(machine.input_block, 0, TypeRef("char"))
        value = machine.call(entry, [buf, len(input)], machine.functions[entry][1].loc)
        exit_code = value.offset if isinstance(value, Pointer) else int(value)
    except _Crash as exc:
        crash = machine.crash_report(exc)
    return RunResult(exit_code, crash, ExecutionSlice(frozenset(machine.lines)), frozenset(machine.entered))


def trace_lines(result: RunResult) -> list[str]:
    records = {f"L {file} {line}" for file, line in result.slice.lines}
    records |= {f"F {key.file} {key.function}" for key in result.functions}
    return sorted(records)


def write_trace(result: RunResult, path: str | Path) -> None:
    text = "".join(line + "\n" for line in trace_lines(result))
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def format_report(report: CrashReport) -> str:
    lines = [f"ERROR: MiniSan: {report.kind} at {report.site}"]
    for i, fr in enumerate(report.stack):
        lines.append(f"#{i} in {fr.function} {fr.file}:{fr.line}:{fr.column}")
    return "".join(line + "\n" for line in lines)


def write_report(report: CrashReport, path: str | Path) -> None:
    Path(path).write_text(format_report(report), encoding="utf-8", newline="\n")
