"""
Recurring reads of a packet length field
========================================

A short UDP packet makes ``check_l4_udp`` read ``udp_len`` past the end of
the buffer. The same read appears twice more in a function the fuzzer never
reached. The sanitizer report, not the dice, drives localization here.
"""

import os

from vulnexplore.explore import ExploreConfig, render_report, run_explore
from vulnexplore.fixtures import fixture_dir, load_fixture_corpus
from vulnexplore.localize import parse_crash_report

# the report names the access site and the call chain that led to it
corpus = load_fixture_corpus("udp")
report_text = corpus.entries["001"].report_path.read_text()
print(report_text)
report = parse_crash_report(report_text)
print("top frame:", report.top.function, "called from", report.stack[1].function)

# run the whole pipeline; traces name bare source files, so work from the fixture dir
os.chdir(fixture_dir("udp"))
config = ExploreConfig(("udp.mc", "pinctrl.mc"), fixture_dir("udp") / "manifest.jsonl")
result = run_explore(config)
print(render_report(result, "text"))

# counters exclude the match at the crash site itself
(section,) = result.sections
print("explored", section.explored, "ranked high", section.high)
