"""Direct call graph and the callsite template."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..corpus import FunctionKey
from ..frontend import SourceLocation, TranslationUnit
from ..interp import CrashReport
from ..templates import Callee, Matcher, MatchSet, NodeKind, known_keys, match_template


@dataclass(frozen=True, order=True)
class CallEdge:
    caller: FunctionKey
    callee: str
    site: SourceLocation


@dataclass(frozen=True)
class CallGraph:
    edges: frozenset[CallEdge]

    def __len__(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[CallEdge]:
        return sorted(self.edges, key=lambda e: (e.site.file, e.site.pos, e.caller, e.callee))

    def callers_of(self, name: str) -> list[CallEdge]:
        return [e for e in self.sorted_edges() if e.callee == name]


def build_callgraph(tus: Sequence[TranslationUnit]) -> CallGraph:
    """One edge per call expression; builtins appear as ordinary callee names."""
    edges = set()
    for tu in tus:
        for fn in tu.root.children:
            if fn.kind != "FunctionDecl":
                continue
            for node in fn.walk():
                if node.kind == "CallExpr":
                    edges.add(CallEdge(FunctionKey(tu.file, fn.name), node.name, node.loc))
    return CallGraph(frozenset(edges))


def callsite_template(report: CrashReport) -> Matcher:
    return NodeKind("callExpr", None, (Callee(report.top.function),))


def callsite_matches(report: CrashReport, tus: Sequence[TranslationUnit], jobs: int = 1) -> MatchSet:
    """Every call to the crashing function; the call on the crash stack is flagged known."""
    matches = match_template(tus, callsite_template(report), jobs)
    if len(report.stack) < 2:
        return matches
    caller = report.stack[1]
    return matches.with_known(known_keys(matches, [(caller.file, caller.line, caller.column)]))
