"""Semantic templates: CFGs, call graph, callsite matching and taint analysis."""

from __future__ import annotations

from .callgraph import CallEdge, CallGraph, build_callgraph, callsite_matches, callsite_template
from .cfg import EDGE_LABELS, BasicBlock, Cfg, build_cfg
from .taint import (
    DEFAULT_SINKS,
    RELATIONAL_OPS,
    SemanticError,
    TaintFinding,
    TaintResult,
    TaintRules,
    UnknownRecord,
    normalize_record,
    taint_analysis,
    taint_scan,
)

__all__ = [
    "DEFAULT_SINKS",
    "EDGE_LABELS",
    "RELATIONAL_OPS",
    "BasicBlock",
    "CallEdge",
    "CallGraph",
    "Cfg",
    "SemanticError",
    "TaintFinding",
    "TaintResult",
    "TaintRules",
    "UnknownRecord",
    "build_callgraph",
    "build_cfg",
    "callsite_matches",
    "callsite_template",
    "normalize_record",
    "taint_analysis",
    "taint_scan",
]
