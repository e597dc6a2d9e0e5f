"""The end-to-end exploration pipeline and its report renderers.

For each distinct crash: localize, derive a template, match it over every
source, optionally add semantic matches, then rank against corpus coverage.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Coverset, CorpusEntry, FunctionKey, FuzzCorpus, compute_coverset, load_corpus
from .errors import VulnExploreError
from .frontend import TranslationUnit, load_program
from .interp import CrashReport
from .localize import FaultLocus, LocalizeError, localize_failure, read_crash_report
from .rank import RankedMatches, rank_matches
from .semantic import DEFAULT_SINKS, TaintResult, callsite_matches, taint_analysis
from .templates import (
    TEMPLATE_RULES,
    AnyOf,
    Match,
    MatchSet,
    TemplateError,
    derive_syntactic_template,
    known_keys,
    match_template,
    render_match_block,
    render_matcher,
)

OUTPUT_FORMATS = ("text", "json")
REPORT_HEADER = "vulnexplore exploration report"


class CliError(VulnExploreError):
    module = "cli"


@dataclass(frozen=True)
class ExploreConfig:
    sources: tuple[str, ...]
    manifest: Path
    entry: Optional[str] = None
    template_rule: str = "auto"
    sinks: tuple[str, ...] = DEFAULT_SINKS
    # None: decide per crash (on for assertion failures)
    semantic: Optional[bool] = None
    output: str = "text"
    jobs: int = 1
    prefer: str = "auto"

    def __post_init__(self):
        if not self.sources:
            raise CliError("no source files given")
        if self.template_rule not in TEMPLATE_RULES:
            raise CliError(f"unknown template rule {self.template_rule!r}")
        if self.output not in OUTPUT_FORMATS:
            raise CliError(f"unknown output format {self.output!r}")
        if not self.sinks:
            raise CliError("sink list is empty")
        if self.jobs < 1:
            raise CliError("--jobs must be at least 1")


@dataclass
class CrashSection:
    entry_id: str
    crash_kind: Optional[str]
    duplicates: tuple[str, ...] = ()
    unlocalized: Optional[str] = None
    locus: Optional[FaultLocus] = None
    template: Optional[str] = None
    multi_line: bool = False
    semantic: bool = False
    callsite_count: int = 0
    matches: MatchSet = field(default_factory=MatchSet)
    taint: Optional[TaintResult] = None
    ranked: RankedMatches = field(default_factory=RankedMatches)

    @property
    def explored(self) -> int:
        return len(self.matches) - len(self.matches.known)

    @property
    def high(self) -> int:
        return sum(1 for m in self.ranked.high if not self.matches.is_known(m))


@dataclass
class ExploreReport:
    sources: tuple[str, ...]
    corpus_size: int
    crash_count: int
    coverset: Coverset
    sections: list[CrashSection]
    timings: dict[str, float] = field(default_factory=dict)


def crash_key(entry: CorpusEntry, report: Optional[CrashReport]) -> tuple:
    """Crashes with the same kind, top function and site line count as one."""
    if report is None:
        return ("?", "", "", 0, entry.id)
    top = FunctionKey(report.top.file, report.top.function)
    return (report.kind, top.file, top.function, report.site.line, "")


def _read_report(entry: CorpusEntry) -> Optional[CrashReport]:
    if entry.report_path is None or not Path(entry.report_path).exists():
        return None
    return read_crash_report(entry.report_path)


def distinct_crashes(corpus: FuzzCorpus) -> list[tuple[CorpusEntry, Optional[CrashReport], tuple[str, ...]]]:
    """Representative (smallest id) of each crash group, with the other ids."""
    groups: dict[tuple, list[tuple[CorpusEntry, Optional[CrashReport]]]] = {}
    for entry in corpus.crashes():
        report = _read_report(entry)
        groups.setdefault(crash_key(entry, report), []).append((entry, report))
    out = []
    for members in groups.values():
        members.sort(key=lambda er: er[0].id)
        rep, report = members[0]
        out.append((rep, report, tuple(e.id for e, _ in members[1:])))
    out.sort(key=lambda t: t[0].id)
    return out


class _Clock:
    def __init__(self, sink: dict[str, float]):
        self.sink = sink

    def __call__(self, stage: str):
        clock = self

        class _Span:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                clock.sink[stage] = clock.sink.get(stage, 0.0) + time.perf_counter() - self.t0

        return _Span()


def _semantic_on(config: ExploreConfig, report: Optional[CrashReport]) -> bool:
    if config.semantic is not None:
        return config.semantic
    return report is not None and report.kind == "assertion-failure"


def explore_crash(
    entry: CorpusEntry,
    report: Optional[CrashReport],
    duplicates: tuple[str, ...],
    corpus: FuzzCorpus,
    tus: Sequence[TranslationUnit],
    coverset: Coverset,
    config: ExploreConfig,
    clock: _Clock,
) -> CrashSection:
    section = CrashSection(entry.id, report.kind if report else None, duplicates)
    try:
        with clock("localize"):
            locus = localize_failure(entry, corpus, tus, config.prefer)
        with clock("derive"):
            template = derive_syntactic_template(tus, locus, config.template_rule)
    except (LocalizeError, TemplateError) as exc:
        section.unlocalized = exc.message
        return section
    section.locus = locus
    section.template = render_matcher(template)
    section.multi_line = isinstance(template, AnyOf)
    with clock("match"):
        matches = match_template(tus, template, config.jobs)
    section.semantic = _semantic_on(config, report)
    if section.semantic and report is not None:
        with clock("semantic"):
            calls = callsite_matches(report, tus, config.jobs)
            section.callsite_count = len(calls)
            matches = matches.union(calls)
            if report.is_overflow and locus.faulty_member is not None:
                section.taint = taint_analysis(tus, locus.faulty_member[0], config.sinks, config.jobs)
    if report is not None:
        sites = [(f.file, f.line, f.column) for f in report.stack]
    else:
        sites = [(file, line, None) for file, line in locus.lines]
    section.matches = matches.with_known(known_keys(matches, sites))
    with clock("rank"):
        section.ranked = rank_matches(section.matches, coverset)
    return section


def load_sources(paths: Sequence[str]) -> list[TranslationUnit]:
    try:
        return load_program(paths)
    except OSError as exc:
        raise CliError(f"cannot read source {exc.filename}: {exc.strerror}") from None


def run_explore(config: ExploreConfig, tus: Optional[Sequence[TranslationUnit]] = None) -> ExploreReport:
    timings: dict[str, float] = {}
    clock = _Clock(timings)
    with clock("load"):
        if tus is None:
            tus = load_sources(config.sources)
        corpus = load_corpus(config.manifest)
        coverset = compute_coverset(corpus)
    if config.entry is not None and not any(config.entry in tu.functions for tu in tus):
        raise CliError(f"entry function {config.entry!r} not found in sources")
    sections = [
        explore_crash(entry, report, dups, corpus, tus, coverset, config, clock)
        for entry, report, dups in distinct_crashes(corpus)
    ]
    return ExploreReport(
        tuple(tu.file for tu in tus),
        len(corpus),
        len(corpus.crashes()),
        coverset,
        sections,
        timings,
    )


# rendering ---------------------------------------------------------------


def _match_line(m: Match) -> str:
    return f"{m.loc} {m.enclosing_function.function}"


def render_text(report: ExploreReport) -> str:
    out = [
        REPORT_HEADER,
        f"sources: {' '.join(report.sources)}",
        f"corpus: entries={report.corpus_size} crashes={report.crash_count} distinct={len(report.sections)}",
        f"coverset: functions={len(report.coverset)}",
    ]
    if not report.sections:
        out.append("no crashes to explore")
        return "\n".join(out) + "\n"
    for s in report.sections:
        out.append("")
        out.append(f"== crash {s.entry_id} ({s.crash_kind or 'unknown'}) ==")
        if s.duplicates:
            out.append(f"duplicates: {','.join(s.duplicates)}")
        if s.unlocalized is not None:
            out.append(f"unlocalized: {s.unlocalized}")
            continue
        out.extend(s.locus.summary())
        out.append(f"template: {s.template}")
        if s.multi_line:
            out.append("template-note: anyOf over per-line templates of a multi-line locus")
        if s.semantic:
            taint = "whole-program" if s.taint is not None else "off"
            out.append(f"semantic: callsite-matches={s.callsite_count} taint={taint}")
        out.append("")
        for i, m in enumerate(s.matches, 1):
            out.append(render_match_block(m, i))
        for m in s.matches:
            if s.matches.is_known(m):
                out.append(f"known: {m.loc}")
        if s.taint is not None:
            out.extend(f.render() for f in s.taint.findings)
            out.append(f"taint-guarded: {len(s.taint.guarded)}")
        out.extend(f"high: {_match_line(m)}" for m in s.ranked.high)
        out.extend(f"low: {_match_line(m)}" for m in s.ranked.low)
        out.append(f"explored={s.explored} high={s.high}")
    return "\n".join(out) + "\n"


def _match_json(m: Match, known: bool) -> dict:
    return {
        "file": m.loc.file,
        "line": m.loc.line,
        "column": m.loc.column,
        "end_line": m.end_loc.line,
        "end_column": m.end_loc.column,
        "node_id": m.node_id,
        "function": m.enclosing_function.function,
        "snippet": m.snippet,
        "known": known,
    }


def _section_json(s: CrashSection) -> dict:
    out: dict = {"id": s.entry_id, "kind": s.crash_kind, "duplicates": list(s.duplicates)}
    if s.unlocalized is not None:
        out["unlocalized"] = s.unlocalized
        return out
    locus = s.locus
    out["locus"] = {
        "mode": locus.mode,
        "function": str(locus.focus_function),
        "lines": [f"{f}:{n}" for f, n in sorted(locus.lines)],
        "member": f"{locus.faulty_member[0]}.{locus.faulty_member[1]}" if locus.faulty_member else None,
    }
    out["template"] = s.template
    out["multi_line"] = s.multi_line
    out["semantic"] = s.semantic
    out["callsite_matches"] = s.callsite_count
    out["matches"] = [_match_json(m, s.matches.is_known(m)) for m in s.matches]
    if s.taint is not None:
        out["taint"] = {
            "findings": [
                {
                    "sink_call": str(f.sink_call),
                    "sink": f.sink_name,
                    "arg": f.tainted_arg_index,
                    "source": f.source_type,
                }
                for f in s.taint.findings
            ],
            "guarded": len(s.taint.guarded),
        }
    else:
        out["taint"] = None
    out["high"] = [_match_line(m) for m in s.ranked.high]
    out["low"] = [_match_line(m) for m in s.ranked.low]
    out["explored"] = s.explored
    out["ranked_high"] = s.high
    return out


def render_json(report: ExploreReport) -> str:
    doc = {
        "header": REPORT_HEADER,
        "sources": list(report.sources),
        "corpus": {
            "entries": report.corpus_size,
            "crashes": report.crash_count,
            "distinct": len(report.sections),
        },
        "coverset": sorted(str(k) for k in report.coverset.functions),
        "sections": [_section_json(s) for s in report.sections],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def render_report(report: ExploreReport, fmt: str = "text") -> str:
    if fmt == "text":
        return render_text(report)
    if fmt == "json":
        return render_json(report)
    raise CliError(f"unknown output format {fmt!r}")
