"""Acceptance criteria at their stated tolerances.

Every test records the criterion it belongs to; conftest folds the outcomes into
one PASS/FAIL line per criterion at the end of the run. Run this file directly
to execute only the acceptance suite.
"""

from __future__ import annotations

import random
import string
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings

from support import ALL_FIXTURES, fixture_tus, matchers, oracle_match_positions, path_dominators
from vulnexplore.corpus import (
    Coverset,
    ExecutionSlice,
    FunctionKey,
    compute_coverset,
    load_corpus,
    obtain_parent_mutation,
    obtain_slice,
    read_trace,
)
from vulnexplore.explore import ExploreConfig, render_report, run_explore
from vulnexplore.fixtures import CORPUS_FIXTURES, FIXTURES, fixture_dir, fixture_sources, load_fixture_tus, materialize, mutated_seeds
from vulnexplore.frontend import SourceLocation, load_program
from vulnexplore.interp import CRASH_KINDS, CrashReport, Frame, RunResult, format_report, write_report, write_trace
from vulnexplore.localize import localize_failure, obtain_dice, parse_crash_report
from vulnexplore.rank import rank_matches
from vulnexplore.semantic import build_cfg, taint_analysis
from vulnexplore.templates import Match, MatchSet, derive_syntactic_template, match_template, parse_matcher, render_matcher

UDP_TEMPLATE = 'declStmt(hasDescendant(memberExpr(member("udp_len"), objectType("struct udp_header"))))'
ABORT_TEMPLATE = 'exprStmt(callExpr(callee("abort")))'


def criterion(record_property, key, detail=""):
    record_property("criterion", key)
    if detail:
        record_property("detail", detail)


def explore_fixture(name, monkeypatch, fmt="text", jobs=1, manifest=None):
    monkeypatch.chdir(fixture_dir(name) if manifest is None else manifest.parent)
    config = ExploreConfig(FIXTURES[name].sources, manifest or Path("manifest.jsonl"), output=fmt, jobs=jobs)
    return run_explore(config)


# 1 ---------------------------------------------------------------------------------------


def test_criterion_1_motivating_example(record_property, monkeypatch):
    criterion(record_property, "1 motivating-example reproduction", "dice, 2 matches, line 17 high, < 1 s")
    start = time.perf_counter()
    monkeypatch.chdir(fixture_dir("motivating"))
    tus = load_program(["test.mc"])
    corpus = load_corpus(Path("manifest.jsonl"))
    crash = corpus.entries["001"]
    dice = obtain_dice(obtain_slice(crash), obtain_slice(obtain_parent_mutation(crash, corpus)))
    locus = localize_failure(crash, corpus, tus)
    template = derive_syntactic_template(tus, locus)
    matches = match_template(tus, template)
    ranked = rank_matches(matches, compute_coverset(corpus))
    elapsed = time.perf_counter() - start

    assert dice.lines == {("test.mc", 9)}
    assert render_matcher(template) == ABORT_TEMPLATE
    assert [(m.loc.line, m.enclosing_function.function) for m in matches] == [(9, "parse"), (17, "parse_hashed")]
    assert [m.loc.line for m in ranked.high] == [17]
    assert [m.loc.line for m in ranked.low] == [9]
    assert elapsed < 1.0


# 2 ---------------------------------------------------------------------------------------


def test_criterion_2_udp_fixture(record_property, monkeypatch):
    criterion(record_property, "2 udp-fixture reproduction", "template, 3 matches / 1 known, explored=2 high=2, < 1 s")
    start = time.perf_counter()
    report = explore_fixture("udp", monkeypatch)
    text = render_report(report, "text")
    elapsed = time.perf_counter() - start

    (section,) = report.sections
    assert section.template == UDP_TEMPLATE
    assert len(section.matches) == 3
    assert [(m.loc.file, m.loc.line) for m in section.matches if section.matches.is_known(m)] == [("udp.mc", 12)]
    assert (section.explored, section.high) == (2, 2)
    assert {m.enclosing_function.function for m in section.ranked.high} == {"pinctrl_handle_put_dhcpv6_opts"}
    assert text.endswith("explored=2 high=2\n")
    assert elapsed < 1.0


# 3: substituted property suites ---------------------------------------------------------


def test_criterion_3_dice_algebra(record_property):
    criterion(record_property, "3 property suites", "dice 1000, matcher oracle 200/fixture, rank 1000, dominators, taint pair")
    rng = random.Random(3)
    for _ in range(1000):
        pool = [(rng.choice(["a.mc", "b.mc", "c.mc"]), rng.randint(1, 60)) for _ in range(40)]
        a = ExecutionSlice(frozenset(rng.sample(pool, rng.randint(0, 30))))
        b = ExecutionSlice(frozenset(rng.sample(pool, rng.randint(0, 30))))
        d = obtain_dice(a, b).lines
        assert d <= a.lines
        assert not d & b.lines
        assert obtain_dice(a, a).lines == frozenset()


FIXTURE_TUS = fixture_tus()
_oracle_runs: dict[str, int] = {}


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_criterion_3_matcher_oracle(record_property, name):
    criterion(record_property, "3 property suites")
    tus = FIXTURE_TUS[name]
    _oracle_runs[name] = 0

    @settings(max_examples=200, deadline=None, database=None, suppress_health_check=list(HealthCheck))
    @given(matchers())
    def check(m):
        _oracle_runs[name] += 1
        got = [(x.loc.file, x.loc.line, x.loc.column, x.node_id) for x in match_template(tus, m)]
        assert got == oracle_match_positions(tus, m)

    check()
    assert _oracle_runs[name] >= 200


def _random_match(rng: random.Random) -> Match:
    file = rng.choice(["a.mc", "b.mc"])
    loc = SourceLocation(file, rng.randint(1, 40), rng.randint(1, 12))
    return Match(loc, loc, rng.randint(0, 400), FunctionKey(file, rng.choice("fghkm")), "s", "s")


def _random_coverset(rng: random.Random) -> Coverset:
    return Coverset(frozenset(FunctionKey(rng.choice(["a.mc", "b.mc"]), rng.choice("fghkm")) for _ in range(rng.randint(0, 6))))


def test_criterion_3_rank_partition(record_property):
    criterion(record_property, "3 property suites")
    rng = random.Random(33)
    for _ in range(1000):
        ms = MatchSet(tuple(_random_match(rng) for _ in range(rng.randint(0, 15))))
        cov, extra = _random_coverset(rng), _random_coverset(rng)
        ranked = rank_matches(ms, cov)
        assert len(ranked.high) + len(ranked.low) == len(ms)
        assert set(ranked.high) | set(ranked.low) == set(ms.matches) and not set(ranked.high) & set(ranked.low)
        assert set(rank_matches(ms, cov | extra).low) >= set(ranked.low)
        assert rank_matches(ranked.high + ranked.low, cov) == ranked


def test_criterion_3_dominators(record_property):
    criterion(record_property, "3 property suites")
    checked = 0
    for tus in FIXTURE_TUS.values():
        for tu in tus:
            for fn in tu.root.children:
                if fn.kind != "FunctionDecl" or not any(c.kind == "CompoundStmt" for c in fn.children):
                    continue
                cfg = build_cfg(fn)
                if len(cfg.body_blocks) > 8:
                    continue
                brute = path_dominators(cfg)
                assert set(brute) == cfg.reachable()
                for b, doms in brute.items():
                    assert cfg.dom_sets[b] == doms
                checked += 1
    assert checked >= 8


def test_criterion_3_taint_guard_separation(record_property):
    criterion(record_property, "3 property suites")
    unguarded = taint_analysis(FIXTURE_TUS["taint-unguarded"], "struct udp_header")
    guarded = taint_analysis(FIXTURE_TUS["taint-guarded"], "struct udp_header")
    assert (len(unguarded.findings), len(guarded.findings)) == (1, 0)
    assert len(guarded.guarded) == 1


# 4: round-trips --------------------------------------------------------------------------

_NAME = string.ascii_lowercase + "_"


def _name(rng: random.Random, n: int = 8) -> str:
    return "".join(rng.choice(_NAME) for _ in range(rng.randint(1, n)))


def test_criterion_4_trace_round_trip(record_property, tmp_path):
    criterion(record_property, "4 round-trips", "trace, report, matcher: fixtures + 1000 random each")
    for name in CORPUS_FIXTURES:
        for entry in load_corpus(fixture_dir(name) / "manifest.jsonl"):
            s, fns = read_trace(entry.trace_path)
            write_trace(RunResult(0, None, s, frozenset(fns)), tmp_path / "t")
            assert (tmp_path / "t").read_bytes() == Path(entry.trace_path).read_bytes()
    rng = random.Random(4)
    for _ in range(1000):
        files = [_name(rng) + ".mc" for _ in range(3)]
        lines = frozenset((rng.choice(files), rng.randint(1, 10**4)) for _ in range(rng.randint(0, 30)))
        fns = frozenset(FunctionKey(rng.choice(files), _name(rng)) for _ in range(rng.randint(0, 5)))
        write_trace(RunResult(0, None, ExecutionSlice(lines), fns), tmp_path / "t")
        assert read_trace(tmp_path / "t") == (ExecutionSlice(lines), fns)


def test_criterion_4_report_round_trip(record_property, tmp_path):
    criterion(record_property, "4 round-trips")
    for name in CORPUS_FIXTURES:
        for entry in load_corpus(fixture_dir(name) / "manifest.jsonl").crashes():
            text = Path(entry.report_path).read_text()
            assert format_report(parse_crash_report(text)) == text
    rng = random.Random(44)
    for _ in range(1000):
        frames = tuple(
            Frame(_name(rng), _name(rng) + ".mc", rng.randint(1, 999), rng.randint(1, 99)) for _ in range(rng.randint(1, 6))
        )
        top = frames[0]
        report = CrashReport(rng.choice(sorted(CRASH_KINDS)), SourceLocation(top.file, top.line, top.column), frames)
        write_report(report, tmp_path / "r")
        assert parse_crash_report((tmp_path / "r").read_text()) == report


def test_criterion_4_matcher_round_trip(record_property):
    criterion(record_property, "4 round-trips")
    count = [0]

    @settings(max_examples=1000, deadline=None, database=None, suppress_health_check=list(HealthCheck))
    @given(matchers())
    def check(m):
        count[0] += 1
        assert parse_matcher(render_matcher(m)) == m

    check()
    for text in (UDP_TEMPLATE, ABORT_TEMPLATE):
        assert render_matcher(parse_matcher(text)) == text
    assert count[0] >= 1000


# 5 ---------------------------------------------------------------------------------------


@pytest.mark.parametrize("name", CORPUS_FIXTURES)
def test_criterion_5_determinism(record_property, monkeypatch, name):
    criterion(record_property, "5 determinism", "3 runs and 1 vs 4 threads, text and json")
    for fmt in ("text", "json"):
        runs = [render_report(explore_fixture(name, monkeypatch, fmt), fmt) for _ in range(3)]
        assert runs[0] == runs[1] == runs[2]
        assert render_report(explore_fixture(name, monkeypatch, fmt, jobs=4), fmt) == runs[0]


# 6 ---------------------------------------------------------------------------------------


def test_criterion_6_alias_superiority(record_property):
    criterion(record_property, "6 alias-superiority regression")
    ms = match_template(load_fixture_tus("motivating"), parse_matcher(ABORT_TEMPLATE))
    lines = fixture_sources("motivating")["test.mc"].split("\n")
    assert 17 in {m.loc.line for m in ms}
    assert "CUSTOM();" in lines[16]
    grep_hits = {i + 1 for i, line in enumerate(lines) if "abort(" in line}
    assert 17 not in grep_hits


# 7 ---------------------------------------------------------------------------------------


@pytest.mark.parametrize("name", CORPUS_FIXTURES)
def test_criterion_7_runtime(record_property, monkeypatch, tmp_path, name):
    criterion(record_property, "7 end-to-end runtime", "100-entry corpus per fixture, < 5 s")
    manifest = materialize(name, tmp_path / name, mutated_seeds(name, 100))
    assert len(load_corpus(manifest)) == 100
    start = time.perf_counter()
    report = explore_fixture(name, monkeypatch, manifest=manifest)
    render_report(report, "text")
    elapsed = time.perf_counter() - start
    assert report.corpus_size == 100 and report.sections
    assert elapsed < 5.0


if __name__ == "__main__":
    import subprocess
    import sys

    raise SystemExit(subprocess.call([sys.executable, "-m", "pytest", __file__, "-q"]))
