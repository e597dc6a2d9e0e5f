"""Syntactic vulnerability templates: matcher DSL, derivation and matching."""

from __future__ import annotations

from .derive import (
    ANCHOR_KINDS,
    TEMPLATE_RULES,
    NoAnchor,
    TemplateError,
    derive_syntactic_template,
    find_anchor,
    template_for_anchor,
)
from .dsl import (
    KIND_TO_MATCHER,
    NODE_MATCHERS,
    AllOf,
    AnyOf,
    Callee,
    DslError,
    HasDescendant,
    Matcher,
    MatcherExpr,
    Member,
    NodeKind,
    ObjectType,
    Unless,
    parse_matcher,
    render_matcher,
    validate,
)
from .engine import (
    FILE_SCOPE,
    Match,
    MatchSet,
    known_keys,
    make_match,
    match_template,
    matches_node,
    render_match_block,
    render_matches,
)

__all__ = [
    "ANCHOR_KINDS",
    "FILE_SCOPE",
    "KIND_TO_MATCHER",
    "NODE_MATCHERS",
    "TEMPLATE_RULES",
    "AllOf",
    "AnyOf",
    "Callee",
    "DslError",
    "HasDescendant",
    "Match",
    "MatchSet",
    "Matcher",
    "MatcherExpr",
    "Member",
    "NoAnchor",
    "NodeKind",
    "ObjectType",
    "TemplateError",
    "Unless",
    "derive_syntactic_template",
    "find_anchor",
    "known_keys",
    "make_match",
    "match_template",
    "matches_node",
    "parse_matcher",
    "render_match_block",
    "render_matcher",
    "render_matches",
    "template_for_anchor",
    "validate",
]
