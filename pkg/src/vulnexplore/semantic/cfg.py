"""Per-function control-flow graphs with dominators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..frontend import AstNode

EDGE_LABELS = ("fallthrough", "true", "false")


@dataclass
class BasicBlock:
    id: int
    statements: list[int] = field(default_factory=list)
    # IfStmt/WhileStmt whose condition ends this block
    terminator: Optional[int] = None


@dataclass
class Cfg:
    function: str
    blocks: list[BasicBlock]
    edges: list[tuple[int, int, str]]
    entry: int
    exit: int
    nodes: dict[int, AstNode]
    dominators: dict[int, Optional[int]] = field(default_factory=dict)
    dom_sets: dict[int, frozenset[int]] = field(default_factory=dict)

    @property
    def body_blocks(self) -> list[BasicBlock]:
        """Blocks excluding the synthetic exit."""
        return [b for b in self.blocks if b.id != self.exit]

    def preds(self, b: int) -> list[int]:
        return [s for s, d, _ in self.edges if d == b]

    def succs(self, b: int) -> list[tuple[int, str]]:
        return [(d, lab) for s, d, lab in self.edges if s == b]

    def reachable(self) -> set[int]:
        seen = {self.entry}
        stack = [self.entry]
        while stack:
            b = stack.pop()
            for d, _ in self.succs(b):
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return seen

    def block_of(self, stmt_id: int) -> Optional[int]:
        for b in self.blocks:
            if stmt_id in b.statements:
                return b.id
        return None

    def dominates(self, a: int, b: int) -> bool:
        return a in self.dom_sets.get(b, ())


class _Builder:
    def __init__(self):
        self.blocks: list[BasicBlock] = []
        self.edges: list[tuple[int, int, str]] = []
        self.nodes: dict[int, AstNode] = {}

    def new(self) -> int:
        self.blocks.append(BasicBlock(len(self.blocks)))
        return len(self.blocks) - 1

    def edge(self, a: int, b: int, label: str) -> None:
        self.edges.append((a, b, label))

    def stmt(self, node: AstNode, cur: Optional[int], exit_id: int) -> Optional[int]:
        """Append ``node`` after block ``cur``; returns the open block afterwards (None if control left)."""
        if cur is None:
            # unreachable code still gets a block of its own
            cur = self.new()
        kind = node.kind
        if kind == "CompoundStmt":
            for child in node.children:
                cur = self.stmt(child, cur, exit_id)
            return cur
        self.nodes[node.id] = node
        if kind == "ReturnStmt":
            self.blocks[cur].statements.append(node.id)
            self.edge(cur, exit_id, "fallthrough")
            return None
        if kind == "IfStmt":
            self.blocks[cur].statements.append(node.id)
            self.blocks[cur].terminator = node.id
            join = None
            then = self.new()
            self.edge(cur, then, "true")
            then_end = self.stmt(node.children[1], then, exit_id)
            if len(node.children) > 2:
                other = self.new()
                self.edge(cur, other, "false")
                other_end = self.stmt(node.children[2], other, exit_id)
            else:
                other_end = cur
            ends = [(then_end, "fallthrough"), (other_end, "false" if other_end == cur else "fallthrough")]
            for end, label in ends:
                if end is not None:
                    if join is None:
                        join = self.new()
                    self.edge(end, join, label)
            return join
        if kind == "WhileStmt":
            head = cur
            if self.blocks[cur].statements:
                head = self.new()
                self.edge(cur, head, "fallthrough")
            self.blocks[head].statements.append(node.id)
            self.blocks[head].terminator = node.id
            body = self.new()
            self.edge(head, body, "true")
            body_end = self.stmt(node.children[1], body, exit_id)
            if body_end is not None:
                self.edge(body_end, head, "fallthrough")
            after = self.new()
            self.edge(head, after, "false")
            return after
        self.blocks[cur].statements.append(node.id)
        return cur


def build_cfg(fn: AstNode) -> Cfg:
    """Structured CFG for a function definition plus a synthetic exit block."""
    body = [c for c in fn.children if c.kind == "CompoundStmt"]
    if not body:
        raise ValueError(f"function {fn.name!r} has no body")
    b = _Builder()
    entry = b.new()
    exit_id = -1
    # the exit id must be known while building; patch it afterwards
    end = b.stmt(body[0], entry, exit_id)
    exit_id = b.new()
    if end is not None:
        b.edge(end, exit_id, "fallthrough")
    edges = [(s, exit_id if d == -1 else d, lab) for s, d, lab in b.edges]
    cfg = Cfg(fn.name, b.blocks, edges, entry, exit_id, b.nodes)
    _compute_dominators(cfg)
    return cfg


def _compute_dominators(cfg: Cfg) -> None:
    """Iterative dataflow over reachable blocks, then immediate dominators."""
    reach = cfg.reachable()
    order = sorted(reach)
    preds = {n: [p for p in cfg.preds(n) if p in reach] for n in order}
    dom = {n: frozenset(reach) for n in order}
    dom[cfg.entry] = frozenset({cfg.entry})
    changed = True
    while changed:
        changed = False
        for n in order:
            if n == cfg.entry:
                continue
            new = frozenset.intersection(*(dom[p] for p in preds[n])) | {n} if preds[n] else frozenset({n})
            if new != dom[n]:
                dom[n] = new
                changed = True
    cfg.dom_sets = dom
    idom: dict[int, Optional[int]] = {cfg.entry: None}
    for n in order:
        if n == cfg.entry:
            continue
        strict = dom[n] - {n}
        # the closest strict dominator is the one dominated by all the others
        idom[n] = max(strict, key=lambda d: len(dom[d]))
    cfg.dominators = idom
