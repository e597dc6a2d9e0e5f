"""Shared helpers for the test suite: program builders, generators and oracles.

The oracles here are deliberately naive second implementations; they share
no code with the engine they check beyond the AST data types.
"""

from __future__ import annotations

import random
from typing import Optional

from hypothesis import strategies as st

from vulnexplore.frontend import AstNode, load_program
from vulnexplore.fixtures import FIXTURES, load_fixture_tus
from vulnexplore.templates import AllOf, AnyOf, Callee, HasDescendant, Member, NodeKind, ObjectType, Unless

ALL_FIXTURES = tuple(FIXTURES)


def program(text: str, name: str = "t.mc", **more: str):
    """Type-resolved TUs from in-memory sources; extra files via keyword (dots as ``__``)."""
    sources = {name: text}
    sources.update({k.replace("__", "."): v for k, v in more.items()})
    return load_program(list(sources), sources)


def fixture_tus():
    return {name: load_fixture_tus(name) for name in ALL_FIXTURES}


# brute-force matcher evaluation -------------------------------------------------


def _name_matches(node: AstNode, m: NodeKind) -> bool:
    if m.name is None:
        return True
    return (node.op if m.kind == "binaryOperator" else node.name) == m.name


def oracle_top(m, node: AstNode) -> bool:
    if isinstance(m, NodeKind):
        return node.kind == m.ast_kind and _name_matches(node, m) and all(oracle_inner(i, node) for i in m.inner)
    if isinstance(m, HasDescendant):
        return any(oracle_top(m.inner, d) for d in list(node.walk())[1:])
    if isinstance(m, AllOf):
        return all(oracle_top(i, node) for i in m.items)
    if isinstance(m, AnyOf):
        return any(oracle_top(i, node) for i in m.items)
    if isinstance(m, Unless):
        return not oracle_top(m.inner, node)
    return _oracle_property(m, node)


def oracle_inner(m, node: AstNode) -> bool:
    if isinstance(m, NodeKind):
        return any(oracle_top(m, c) for c in node.children)
    if isinstance(m, HasDescendant):
        return any(oracle_top(m.inner, d) for d in list(node.walk())[1:])
    if isinstance(m, AllOf):
        return all(oracle_inner(i, node) for i in m.items)
    if isinstance(m, AnyOf):
        return any(oracle_inner(i, node) for i in m.items)
    if isinstance(m, Unless):
        return not oracle_inner(m.inner, node)
    return _oracle_property(m, node)


def _oracle_property(m, node: AstNode) -> bool:
    if isinstance(m, Member):
        return node.kind == "MemberExpr" and node.name == m.name
    if isinstance(m, ObjectType):
        return node.kind == "MemberExpr" and node.object_record == m.record_name
    if isinstance(m, Callee):
        return node.kind == "CallExpr" and node.name == m.name
    raise AssertionError(m)


def oracle_match_positions(tus, m) -> list[tuple[str, int, int, int]]:
    out = []
    for tu in tus:
        for node in tu.root.walk():
            if oracle_top(m, node):
                out.append((tu.file, node.loc.line, node.loc.column, node.id))
    return sorted(out)


# random matchers ------------------------------------------------------------------

NODE_NAMES = ["declStmt", "exprStmt", "returnStmt", "ifStmt", "callExpr", "memberExpr", "binaryOperator", "varDecl", "declRefExpr"]
NAME_POOL = {
    "callExpr": ["abort", "check_l4_udp", "input_eq", "memcpy", "lookup", "assert"],
    "memberExpr": ["udp_len", "udp_src"],
    "binaryOperator": ["=", "<", "<=", "==", ">", "+", "-"],
    "varDecl": ["udp_len", "udp", "n", "table", "new_len"],
    "declRefExpr": ["buf", "len", "udp", "n", "idx", "pkt"],
}
FIELDS = ["udp_len", "udp_src", "udp_csum", "nope"]
RECORDS = ["struct udp_header", "struct other"]
CALLEES = ["abort", "check_l4_udp", "memcpy", "lookup", "assert", "input_eq"]


@st.composite
def matchers(draw, owner: Optional[str] = None, depth: int = 3):
    """Valid matcher trees; property matchers only appear under their owning node kind."""
    options = ["node", "has", "unless", "all", "any"]
    if owner == "memberExpr":
        options += ["member", "objtype"]
    if owner == "callExpr":
        options += ["callee"]
    if depth <= 0:
        options = ["leaf"] + [o for o in options if o in ("member", "objtype", "callee")]
    choice = draw(st.sampled_from(options))
    if choice == "member":
        return Member(draw(st.sampled_from(FIELDS)))
    if choice == "objtype":
        return ObjectType(draw(st.sampled_from(RECORDS)))
    if choice == "callee":
        return Callee(draw(st.sampled_from(CALLEES)))
    if choice == "leaf":
        kind = draw(st.sampled_from(NODE_NAMES))
        name = draw(st.sampled_from(NAME_POOL[kind])) if kind in NAME_POOL and draw(st.booleans()) else None
        return NodeKind(kind, name)
    if choice == "node":
        kind = draw(st.sampled_from(NODE_NAMES))
        name = draw(st.sampled_from(NAME_POOL[kind])) if kind in NAME_POOL and draw(st.booleans()) else None
        inner = draw(st.lists(matchers(owner=kind, depth=depth - 1), max_size=2))
        return NodeKind(kind, name, tuple(inner))
    if choice == "has":
        return HasDescendant(draw(matchers(owner=None, depth=depth - 1)))
    if choice == "unless":
        return Unless(draw(matchers(owner=owner, depth=depth - 1)))
    items = draw(st.lists(matchers(owner=owner, depth=depth - 1), min_size=1, max_size=3))
    return (AllOf if choice == "all" else AnyOf)(tuple(items))


# random MiniC functions -------------------------------------------------------------

TAINT_HEADER = """struct hdr {
    short a;
    short len;
};

"""

_VARS = ("x", "y", "z")


def _expr(rng: random.Random) -> str:
    r = rng.random()
    if r < 0.25:
        return rng.choice(_VARS)
    if r < 0.45:
        return "h->len"
    if r < 0.6:
        return str(rng.randrange(5))
    if r < 0.8:
        return f"{rng.choice(_VARS)} + {rng.choice(_VARS)}"
    return f"{rng.choice(_VARS)} - 1"


def _cond(rng: random.Random) -> str:
    op = rng.choice(["<", "<=", ">", ">=", "==", "!="])
    return f"{rng.choice(_VARS)} {op} {rng.choice(_VARS + ('3', 'h->a'))}"


def _stmts(rng: random.Random, depth: int, loops: bool, budget: list[int]) -> list[str]:
    out = []
    for _ in range(rng.randint(1, 3)):
        if budget[0] <= 0:
            break
        budget[0] -= 1
        r = rng.random()
        if r < 0.35:
            out.append(f"{rng.choice(_VARS)} = {_expr(rng)};")
        elif r < 0.55:
            args = [rng.choice(("buf", "x", "y", "z")) for _ in range(2)] + [rng.choice(_VARS)]
            out.append(f"memcpy({', '.join(args)});")
        elif r < 0.8 and depth > 0:
            body = _stmts(rng, depth - 1, loops, budget)
            if rng.random() < 0.5:
                other = _stmts(rng, depth - 1, loops, budget)
                out.append(f"if ({_cond(rng)}) {{ {' '.join(body)} }} else {{ {' '.join(other)} }}")
            else:
                out.append(f"if ({_cond(rng)}) {{ {' '.join(body)} }}")
        elif loops and depth > 0:
            body = _stmts(rng, depth - 1, loops, budget)
            out.append(f"while ({_cond(rng)}) {{ {' '.join(body)} }}")
        else:
            out.append(f"{rng.choice(_VARS)} = {_expr(rng)};")
    return out


def random_function(seed: int, loops: bool = False, depth: int = 2) -> str:
    """A MiniC program with one function over tainted header ``h`` and scalars x, y, z."""
    rng = random.Random(seed)
    body = _stmts(rng, depth, loops, [8])
    lines = [
        "int f(char *buf, size_t len) {",
        "    struct hdr *h = (struct hdr *) buf;",
        "    size_t x = 0;",
        "    size_t y = len;",
        "    size_t z = 0;",
    ]
    lines += ["    " + s for s in body]
    lines += ["    return 0;", "}"]
    return TAINT_HEADER + "\n".join(lines) + "\n"


# per-path taint oracle ---------------------------------------------------------------


def _oracle_tainted(expr: AstNode, record: str, env: frozenset) -> bool:
    for n in expr.walk():
        t = n.type_annot
        if t is not None and t.base == "record" and t.record_name == record and t.pointer_depth >= 1 and t.array_len is None:
            return True
        if n.kind == "MemberExpr" and n.object_record == record:
            return True
        if n.kind == "DeclRefExpr" and n.ref is not None and n.ref in env:
            return True
    return False


def _oracle_assign(expr: AstNode, record: str, env: frozenset) -> frozenset:
    for c in expr.children:
        env = _oracle_assign(c, record, env)
    if expr.kind == "BinaryOperator" and expr.op == "=" and expr.children[0].kind == "DeclRefExpr":
        target = expr.children[0].ref
        env = env | {target} if _oracle_tainted(expr.children[1], record, env) else env - {target}
    return env


def _oracle_calls(expr: AstNode, sinks, record, env, events) -> None:
    for n in expr.walk():
        if n.kind == "CallExpr" and n.name in sinks:
            for i, a in enumerate(n.children[1:]):
                if _oracle_tainted(a, record, env):
                    key = (n.loc.line, n.loc.column)
                    events[key] = min(events.get(key, i), i)
                    break


def _oracle_paths(stmts: list[AstNode], record, sinks, env, events):
    """Walk every path through a loop-free statement list; yields the taint env at its end."""
    if not stmts:
        yield env
        return
    head, rest = stmts[0], stmts[1:]
    if head.kind == "CompoundStmt":
        yield from _oracle_paths(list(head.children) + rest, record, sinks, env, events)
        return
    if head.kind == "IfStmt":
        cond = head.children[0]
        _oracle_calls(cond, sinks, record, env, events)
        env = _oracle_assign(cond, record, env)
        branches = [head.children[1]] + ([head.children[2]] if len(head.children) > 2 else [None])
        for br in branches:
            for e in _oracle_paths([br] if br is not None else [], record, sinks, env, events):
                yield from _oracle_paths(rest, record, sinks, e, events)
        return
    if head.kind == "ReturnStmt":
        for c in head.children:
            _oracle_calls(c, sinks, record, env, events)
        yield env
        return
    if head.kind == "DeclStmt":
        for var in head.children:
            if var.children:
                _oracle_calls(var.children[0], sinks, record, env, events)
                env = _oracle_assign(var.children[0], record, env)
                env = env | {var} if _oracle_tainted(var.children[0], record, env) else env - {var}
            else:
                env = env - {var}
    elif head.kind == "ExprStmt":
        _oracle_calls(head.children[0], sinks, record, env, events)
        env = _oracle_assign(head.children[0], record, env)
    else:
        raise AssertionError(f"oracle does not handle {head.kind}")
    yield from _oracle_paths(rest, record, sinks, env, events)


def oracle_taint(fn: AstNode, record: str, sinks=("memcpy",)) -> dict[tuple[int, int], int]:
    """(line, col) of each sink call tainted on some path -> smallest first-tainted index."""
    body = [c for c in fn.children if c.kind == "CompoundStmt"][0]
    env = frozenset(
        p for p in fn.children if p.kind == "ParamDecl" and p.decl_type.base == "record" and p.decl_type.pointer_depth >= 1
    )
    events: dict[tuple[int, int], int] = {}
    for _ in _oracle_paths([body], record, set(sinks), env, events):
        pass
    return events


# dominators by path enumeration -------------------------------------------------------


def path_dominators(cfg) -> dict[int, frozenset[int]]:
    """Dominator sets as the intersection of every simple entry path to each block."""
    succ: dict[int, list[int]] = {}
    for s, d, _ in cfg.edges:
        succ.setdefault(s, []).append(d)
    seen_paths: dict[int, Optional[frozenset[int]]] = {}

    def dfs(node: int, path: list[int]) -> None:
        nodes = frozenset(path)
        cur = seen_paths.get(node)
        seen_paths[node] = nodes if cur is None else cur & nodes
        for nxt in succ.get(node, []):
            if nxt not in path:
                dfs(nxt, path + [nxt])

    dfs(cfg.entry, [cfg.entry])
    return {k: v for k, v in seen_paths.items()}
