"""Stable textual rendering of a typed AST."""

from __future__ import annotations

from .ast import AstNode, TranslationUnit


def _line(node: AstNode) -> str:
    parts = [node.kind, str(node.loc)]
    if node.name is not None:
        parts.append(f"name={node.name}")
    if node.type_annot is not None:
        parts.append(f"type={node.type_annot}")
    if node.op is not None:
        parts.append(f"op={node.op}")
    return " ".join(parts)


def dump_node(node: AstNode, indent: int = 0) -> list[str]:
    lines = []
    stack = [(node, indent)]
    while stack:
        cur, depth = stack.pop()
        lines.append("  " * depth + _line(cur))
        stack.extend((c, depth + 1) for c in reversed(cur.children))
    return lines


def dump_ast(tu: TranslationUnit) -> str:
    """One node per line, children indented by two spaces, LF-terminated."""
    return "\n".join(dump_node(tu.root)) + "\n"
