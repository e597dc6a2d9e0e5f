"""Turn a fault locus into a syntactic template.

The anchor is the smallest statement covering a locus line. What the template
says about the anchor follows a fixed priority: a record member access, then a
call, then the first variable reference.
"""

from __future__ import annotations

from typing import Optional, Sequence

from ..errors import VulnExploreError
from ..frontend import AstNode, TranslationUnit
from ..localize import FaultLocus
from .dsl import KIND_TO_MATCHER, AnyOf, Callee, HasDescendant, Matcher, Member, NodeKind, ObjectType

TEMPLATE_RULES = ("auto", "member", "call", "declref")
ANCHOR_KINDS = frozenset({"DeclStmt", "ExprStmt", "ReturnStmt", "IfStmt"})


class TemplateError(VulnExploreError):
    module = "templates"


class NoAnchor(TemplateError):
    pass


def _size(node: AstNode) -> int:
    return sum(1 for _ in node.walk())


def _scope(anchor: AstNode) -> AstNode:
    # an if statement is only anchored by its condition
    return anchor.children[0] if anchor.kind == "IfStmt" else anchor


def _covers(anchor: AstNode, line: int) -> bool:
    if anchor.kind == "IfStmt":
        return anchor.loc.line <= line <= anchor.children[0].end_loc.line
    return anchor.covers_line(line)


def _contains_pos(node: AstNode, line: int, col: int) -> bool:
    return node.loc.pos <= (line, col) <= node.end_loc.pos


def find_anchor(tu: TranslationUnit, line: int, site=None) -> Optional[AstNode]:
    """Smallest statement-kind node covering ``line``.

    When the crash site falls on the line, statements containing it win.
    """
    cands = [n for n in tu.root.walk() if n.kind in ANCHOR_KINDS and _covers(n, line)]
    if not cands:
        return None
    if site is not None and site.file == tu.file and site.line == line:
        at_site = [n for n in cands if _contains_pos(_scope(n), site.line, site.column)]
        cands = at_site or cands
    return min(cands, key=lambda n: (n.end_loc.line - n.loc.line, _size(_scope(n)), n.loc.pos, n.id))


def _callee_ids(scope: AstNode) -> set[int]:
    return {n.children[0].id for n in scope.walk() if n.kind == "CallExpr" and n.children}


def _member_part(scope: AstNode, faulty: Optional[tuple[str, str]]) -> Optional[Matcher]:
    members = [n for n in scope.walk() if n.kind == "MemberExpr" and n.object_record is not None]
    if not members:
        return None
    if faulty is not None and any((n.object_record, n.name) == faulty for n in members):
        record, field = faulty
    else:
        record, field = members[0].object_record, members[0].name
    return HasDescendant(NodeKind("memberExpr", None, (Member(field), ObjectType(record))))


def _call_part(scope: AstNode, anchor: AstNode) -> Optional[Matcher]:
    calls = [n for n in scope.walk() if n.kind == "CallExpr"]
    if not calls:
        return None
    call = calls[0]
    m = NodeKind("callExpr", None, (Callee(call.name),))
    return m if call in anchor.children else HasDescendant(m)


def _declref_part(scope: AstNode) -> Optional[Matcher]:
    skip = _callee_ids(scope)
    for n in scope.walk():
        if n.kind == "DeclRefExpr" and n.id not in skip:
            return HasDescendant(NodeKind("declRefExpr", n.name))
    return None


def template_for_anchor(anchor: AstNode, rule: str = "auto", faulty_member=None) -> Matcher:
    if rule not in TEMPLATE_RULES:
        raise TemplateError(f"unknown template rule {rule!r}")
    scope = _scope(anchor)
    kind = KIND_TO_MATCHER[anchor.kind]
    builders = {
        "member": lambda: _member_part(scope, faulty_member),
        "call": lambda: _call_part(scope, anchor),
        "declref": lambda: _declref_part(scope),
    }
    if rule != "auto":
        part = builders[rule]()
        if part is None:
            raise TemplateError(f"rule {rule!r} does not apply to the {kind} at {anchor.loc}")
        return NodeKind(kind, None, (part,))
    for name in ("member", "call", "declref"):
        part = builders[name]()
        if part is not None:
            return NodeKind(kind, None, (part,))
    return NodeKind(kind)


def derive_syntactic_template(
    tus: Sequence[TranslationUnit], locus: FaultLocus, rule: str = "auto"
) -> Matcher:
    """Template for ``locus``; several locus lines give ``anyOf`` over per-line templates."""
    by_file = {tu.file: tu for tu in tus}
    parts: list[Matcher] = []
    for file, line in sorted(locus.lines):
        tu = by_file.get(file)
        if tu is None:
            continue
        anchor = find_anchor(tu, line, locus.site)
        if anchor is None:
            continue
        m = template_for_anchor(anchor, rule, locus.faulty_member)
        if m not in parts:
            parts.append(m)
    if not parts:
        where = ",".join(f"{f}:{n}" for f, n in sorted(locus.lines))
        raise NoAnchor(f"no statement covers any locus line ({where})")
    return parts[0] if len(parts) == 1 else AnyOf(tuple(parts))
