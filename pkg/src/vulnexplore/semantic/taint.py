"""Tainted-type dataflow from a record type to sink calls.

Every function is analysed on its own. The state is the set of tainted
declarations, joined by union at merge points and iterated to a fixed point.
A sink call whose block is strictly dominated by a relational comparison on
tainted data counts as sanitized.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from ..corpus import FunctionKey
from ..errors import VulnExploreError
from ..frontend import AstNode, SourceLocation, TranslationUnit
from .cfg import Cfg, build_cfg

DEFAULT_SINKS = ("memcpy", "strcpy", "input_eq", "hash_eq")
RELATIONAL_OPS = frozenset({"<", "<=", ">", ">="})

State = frozenset  # of declaration AstNodes (identity-hashed)


class SemanticError(VulnExploreError):
    module = "semantic"


class UnknownRecord(SemanticError):
    pass


@dataclass(frozen=True)
class TaintFinding:
    sink_call: SourceLocation
    sink_name: str
    tainted_arg_index: int
    source_type: str
    guarded: bool
    function: Optional[FunctionKey] = None

    def render(self) -> str:
        return f"TAINT {self.sink_call} sink={self.sink_name} arg={self.tainted_arg_index} source={self.source_type}"


@dataclass(frozen=True)
class TaintResult:
    findings: tuple[TaintFinding, ...]
    guarded: tuple[TaintFinding, ...]


def normalize_record(name: str) -> str:
    return name if name.startswith("struct ") else f"struct {name}"


class TaintRules:
    """Source and propagation rules for one tainted record type."""

    def __init__(self, record: str):
        self.record = record

    def tainted(self, expr: AstNode, state: State) -> bool:
        for n in expr.walk():
            t = n.type_annot
            if t is not None and t.points_to_record(self.record):
                return True
            if n.kind == "MemberExpr" and n.object_record == self.record:
                return True
            if n.kind == "DeclRefExpr" and n.ref is not None and n.ref in state:
                return True
        return False

    def initial(self, fn: AstNode) -> State:
        return frozenset(
            p for p in fn.children if p.kind == "ParamDecl" and p.decl_type.points_to_record(self.record)
        )

    def _assignments(self, expr: AstNode, state: State) -> State:
        # post-order so the right side is evaluated before the store
        for child in expr.children:
            state = self._assignments(child, state)
        if expr.kind == "BinaryOperator" and expr.op == "=":
            lhs, rhs = expr.children
            if lhs.kind == "DeclRefExpr" and lhs.ref is not None:
                state = state | {lhs.ref} if self.tainted(rhs, state) else state - {lhs.ref}
        return state

    def transfer(self, stmt: AstNode, state: State) -> State:
        if stmt.kind == "DeclStmt":
            for var in stmt.children:
                if var.children:
                    state = self._assignments(var.children[0], state)
                    state = state | {var} if self.tainted(var.children[0], state) else state - {var}
                else:
                    state = state - {var}
            return state
        for expr in _own_expressions(stmt):
            state = self._assignments(expr, state)
        return state


def _own_expressions(stmt: AstNode) -> list[AstNode]:
    """Expressions evaluated by ``stmt`` itself (conditions, not branch bodies)."""
    if stmt.kind in ("IfStmt", "WhileStmt"):
        return [stmt.children[0]]
    if stmt.kind in ("ExprStmt", "ReturnStmt"):
        return list(stmt.children)
    if stmt.kind == "DeclStmt":
        return [c for var in stmt.children for c in var.children]
    return []


def sink_calls(stmt: AstNode, sinks: Iterable[str]) -> Iterator[AstNode]:
    names = set(sinks)
    for expr in _own_expressions(stmt):
        for n in expr.walk():
            if n.kind == "CallExpr" and n.name in names:
                yield n


def first_tainted_arg(call: AstNode, rules: TaintRules, state: State) -> Optional[int]:
    for i, arg in enumerate(call.children[1:]):
        if rules.tainted(arg, state):
            return i
    return None


def block_states(cfg: Cfg, rules: TaintRules, fn: AstNode) -> dict[int, State]:
    """Fixed-point taint state at the entry of each block."""
    init = rules.initial(fn)
    ins: dict[int, State] = {b.id: frozenset() for b in cfg.blocks}
    outs: dict[int, State] = {}
    preds = {b.id: cfg.preds(b.id) for b in cfg.blocks}
    work = [b.id for b in cfg.blocks]
    while work:
        bid = work.pop(0)
        state = frozenset().union(*(outs.get(p, frozenset()) for p in preds[bid]))
        if bid == cfg.entry:
            state |= init
        ins[bid] = state
        for sid in cfg.blocks[bid].statements:
            state = rules.transfer(cfg.nodes[sid], state)
        if outs.get(bid) != state:
            outs[bid] = state
            for succ, _ in cfg.succs(bid):
                if succ not in work:
                    work.append(succ)
    return ins


def is_guarded(cfg: Cfg, block: int, states: dict[int, State], rules: TaintRules) -> bool:
    """True iff a strictly dominating block branches on a relational test of tainted data."""
    for d in cfg.dom_sets.get(block, ()):
        if d == block:
            continue
        term = cfg.blocks[d].terminator
        if term is None:
            continue
        state = states[d]
        for sid in cfg.blocks[d].statements:
            if sid == term:
                break
            state = rules.transfer(cfg.nodes[sid], state)
        cond = cfg.nodes[term].children[0]
        for n in cond.walk():
            if n.kind == "BinaryOperator" and n.op in RELATIONAL_OPS:
                if any(rules.tainted(side, state) for side in n.children):
                    return True
    return False


def analyze_function(
    tu: TranslationUnit, fn: AstNode, record: str, sinks: Sequence[str]
) -> list[TaintFinding]:
    cfg = build_cfg(fn)
    rules = TaintRules(record)
    states = block_states(cfg, rules, fn)
    key = FunctionKey(tu.file, fn.name)
    out = []
    for block in cfg.blocks:
        state = states[block.id]
        guarded: Optional[bool] = None
        for sid in block.statements:
            stmt = cfg.nodes[sid]
            for call in sink_calls(stmt, sinks):
                idx = first_tainted_arg(call, rules, state)
                if idx is None:
                    continue
                if guarded is None:
                    guarded = is_guarded(cfg, block.id, states, rules)
                out.append(TaintFinding(call.loc, call.name, idx, record, guarded, key))
            state = rules.transfer(stmt, state)
    return out


def _declared(tus: Sequence[TranslationUnit], record: str) -> bool:
    return any(record in tu.records for tu in tus)


def taint_analysis(
    tus: Sequence[TranslationUnit],
    tainted_record: str,
    sinks: Sequence[str] = DEFAULT_SINKS,
    jobs: int = 1,
) -> TaintResult:
    """Run the taint template over every function of every TU."""
    record = normalize_record(tainted_record)
    if not _declared(tus, record):
        raise UnknownRecord(f"record {record!r} is not declared")
    if not sinks:
        raise SemanticError("sink list is empty")
    work = [
        (tu, fn)
        for tu in tus
        for fn in tu.root.children
        if fn.kind == "FunctionDecl" and any(c.kind == "CompoundStmt" for c in fn.children)
    ]
    run = lambda item: analyze_function(item[0], item[1], record, sinks)  # noqa: E731
    if jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, work))
    else:
        parts = [run(item) for item in work]
    found = sorted(
        (f for part in parts for f in part),
        key=lambda f: (f.sink_call.file, f.sink_call.line, f.sink_call.column, f.tainted_arg_index),
    )
    return TaintResult(
        tuple(f for f in found if not f.guarded),
        tuple(f for f in found if f.guarded),
    )


def taint_scan(
    tus: Sequence[TranslationUnit],
    tainted_record: str,
    sinks: Sequence[str] = DEFAULT_SINKS,
) -> list[TaintFinding]:
    """Unguarded findings only; see :func:`taint_analysis` for the guarded ones."""
    return list(taint_analysis(tus, tainted_record, sinks).findings)
