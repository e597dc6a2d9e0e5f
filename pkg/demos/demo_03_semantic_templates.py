"""
Callsite and taint templates
============================

Syntactic templates see one statement. Two semantic templates look wider:
every other call to the function that crashed, and flows from a crashing
record type into copy routines that no bounds check guards.
"""

from vulnexplore.fixtures import load_fixture_corpus, load_fixture_tus
from vulnexplore.localize import parse_crash_report
from vulnexplore.semantic import build_callgraph, build_cfg, callsite_matches, taint_analysis

# callers of the crashing function; the one on the crash stack is already known
tus = load_fixture_tus("udp")
report = parse_crash_report(load_fixture_corpus("udp").entries["001"].report_path.read_text())
sites = callsite_matches(report, tus)
for m in sites:
    print("call:", m.loc, m.enclosing_function.function, "(known)" if sites.is_known(m) else "")

# the call graph behind it, builtins included
for edge in build_callgraph(tus).sorted_edges():
    print(f"{edge.caller} -> {edge.callee} at {edge.site}")

# taint from struct udp_header into memcpy, with and without a length check
for name in ("taint-unguarded", "taint-guarded"):
    result = taint_analysis(load_fixture_tus(name), "struct udp_header", ["memcpy"])
    print(name, "findings:", [f.render() for f in result.findings], "guarded:", len(result.guarded))

# the guard counts because its block dominates the copy
(tu,) = load_fixture_tus("taint-guarded")
cfg = build_cfg(tu.functions["copy_payload"])
for block in cfg.body_blocks:
    print("block", block.id, "idom", cfg.dominators.get(block.id), "succ", cfg.succs(block.id))
