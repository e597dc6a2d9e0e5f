"""
Writing matcher queries by hand
===============================

Templates are ordinary matcher expressions. They parse from text, render
back to the same text, and can be written directly to ask questions of a
code base.
"""

from vulnexplore.fixtures import fixture_sources, load_fixture_tus
from vulnexplore.templates import DslError, match_template, parse_matcher, render_matcher, render_matches

tus = load_fixture_tus("udp") + load_fixture_tus("assert")

# every declaration initialized from some struct field
query = parse_matcher("declStmt(hasDescendant(memberExpr()))")
print(render_matches(match_template(tus, query)))

# returns that call a function, except calls to lookup
query = parse_matcher('returnStmt(callExpr(unless(callee("lookup"))))')
print(render_matcher(query))
print(render_matches(match_template(tus, query)))

# property matchers must sit under the node they describe
try:
    parse_matcher('declStmt(member("udp_len"))')
except DslError as err:
    print("rejected:", err.message)

# a text search misses the macro alias that the AST query finds
source = fixture_sources("motivating")["test.mc"].split("\n")
print("grep abort( :", [i + 1 for i, line in enumerate(source) if "abort(" in line])
hits = match_template(load_fixture_tus("motivating"), parse_matcher('callExpr(callee("abort"))'))
print("callee abort:", [m.loc.line for m in hits])
