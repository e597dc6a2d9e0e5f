"""Fault localization: sanitizer-report parsing and differential execution dicing."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .corpus import (
    CorpusEntry,
    ExecutionSlice,
    FunctionKey,
    FuzzCorpus,
    NoParent,
    obtain_parent_mutation,
    obtain_slice,
)
from .errors import VulnExploreError
from .frontend import AstNode, SourceLocation, TranslationUnit
from .interp import CRASH_KINDS, CrashReport, Frame


class LocalizeError(VulnExploreError):
    module = "localize"


class ReportFormatError(LocalizeError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyDice(LocalizeError):
    pass


_HEADER = re.compile(r"ERROR: MiniSan: (?P<kind>\S+) at (?P<file>.+):(?P<line>\d+):(?P<col>\d+)")
_FRAME = re.compile(r"#(?P<i>\d+) in (?P<fn>\S+) (?P<file>.+):(?P<line>\d+):(?P<col>\d+)")


def parse_crash_report(text: str) -> CrashReport:
    """Inverse of :func:`vulnexplore.interp.format_report`."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ReportFormatError(1, "empty report")
    m = _HEADER.fullmatch(lines[0])
    if m is None:
        raise ReportFormatError(1, f"expected 'ERROR: MiniSan: <kind> at <loc>', got {lines[0]!r}")
    kind = m["kind"]
    if kind not in CRASH_KINDS:
        raise ReportFormatError(1, f"unknown crash kind {kind!r}")
    try:
        site = SourceLocation(m["file"], int(m["line"]), int(m["col"]))
    except ValueError as exc:
        raise ReportFormatError(1, str(exc)) from None
    frames = []
    for i, line in enumerate(lines[1:]):
        fm = _FRAME.fullmatch(line)
        if fm is None:
            raise ReportFormatError(i + 2, f"malformed frame {line!r}")
        if int(fm["i"]) != i:
            raise ReportFormatError(i + 2, f"frame #{fm['i']} out of order, expected #{i}")
        frames.append(Frame(fm["fn"], fm["file"], int(fm["line"]), int(fm["col"])))
    if not frames:
        raise ReportFormatError(2, "report has no stack frames")
    return CrashReport(kind, site, tuple(frames))


def read_crash_report(path: str | Path) -> CrashReport:
    return parse_crash_report(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class FaultDice:
    lines: frozenset[tuple[str, int]]


def obtain_dice(slice1: ExecutionSlice, slice2: ExecutionSlice) -> FaultDice:
    """Lines executed by the faulty run but not by the passing one."""
    return FaultDice(frozenset(slice1.lines - slice2.lines))


@dataclass(frozen=True)
class FaultLocus:
    lines: frozenset[tuple[str, int]]
    focus_function: FunctionKey
    crash_kind: Optional[str]
    stack: tuple[Frame, ...]
    faulty_member: Optional[tuple[str, str]] = None
    mode: str = "dice"
    site: Optional[SourceLocation] = None

    def summary(self) -> list[str]:
        lines = ",".join(f"{f}:{n}" for f, n in sorted(self.lines))
        out = [f"locus: mode={self.mode} function={self.focus_function} lines={lines}"]
        if self.faulty_member is not None:
            out.append(f"member: {self.faulty_member[0]}.{self.faulty_member[1]}")
        return out


def _tu_for(tus: Sequence[TranslationUnit], file: str) -> Optional[TranslationUnit]:
    for tu in tus:
        if tu.file == file:
            return tu
    return None


def enclosing_function(tus: Sequence[TranslationUnit], file: str, line: int) -> Optional[FunctionKey]:
    tu = _tu_for(tus, file)
    if tu is None:
        return None
    fn = tu.function_at_line(line)
    return FunctionKey(file, fn.name) if fn is not None else None


def faulty_member_at(tu: TranslationUnit, line: int, column: int) -> Optional[AstNode]:
    """MemberExpr on ``line`` over a record object; the report column breaks ties."""
    candidates = [
        n
        for n in tu.root.walk()
        if n.kind == "MemberExpr"
        and n.object_record is not None
        and (n.member_loc or n.loc).line == line
    ]
    if not candidates:
        return None
    for n in candidates:
        if (n.member_loc or n.loc).column == column:
            return n
    return min(candidates, key=lambda n: (n.loc.column, n.id))


def localize_failure(
    crash_entry: CorpusEntry,
    corpus: FuzzCorpus,
    tus: Sequence[TranslationUnit],
    prefer: str = "auto",
) -> FaultLocus:
    """Pin a crashing input to source lines plus a focus function.

    ``prefer`` is ``auto`` (sanitizer report for buffer overflows, dicing
    otherwise), ``report`` or ``dice``.
    """
    if not crash_entry.crash:
        raise LocalizeError(f"entry {crash_entry.id!r} did not crash")
    report: Optional[CrashReport] = None
    if crash_entry.report_path is not None and Path(crash_entry.report_path).exists():
        report = read_crash_report(crash_entry.report_path)

    use_report = report is not None and (prefer == "report" or (prefer == "auto" and report.is_overflow))
    if use_report:
        return _from_report(report, tus)

    files = {tu.file for tu in tus}
    try:
        parent = obtain_parent_mutation(crash_entry, corpus)
        dice = obtain_dice(obtain_slice(crash_entry), obtain_slice(parent))
        lines = frozenset(l for l in dice.lines if l[0] in files)
    except NoParent:
        lines = frozenset()

    if not lines:
        if report is None:
            raise EmptyDice(f"entry {crash_entry.id!r}: empty fault dice and no crash report")
        # nothing to diff against; the report's own site is the best evidence
        top = report.top
        return FaultLocus(
            frozenset({(top.file, top.line)}),
            FunctionKey(top.file, top.function),
            report.kind,
            report.stack,
            None,
            "report",
            report.site,
        )

    if report is not None:
        focus = FunctionKey(report.top.file, report.top.function)
        site = report.site
    else:
        file, line = min(lines)
        focus = enclosing_function(tus, file, line)
        site = None
        if focus is None:
            raise EmptyDice(f"entry {crash_entry.id!r}: fault dice lies outside any function")
    return FaultLocus(
        lines,
        focus,
        report.kind if report else None,
        report.stack if report else (),
        None,
        "dice",
        site,
    )


def _from_report(report: CrashReport, tus: Sequence[TranslationUnit]) -> FaultLocus:
    top = report.top
    member = None
    if report.is_overflow:
        tu = _tu_for(tus, top.file)
        if tu is not None:
            node = faulty_member_at(tu, top.line, top.column)
            if node is not None:
                member = (node.object_record, node.name)
    return FaultLocus(
        frozenset({(top.file, top.line)}),
        FunctionKey(top.file, top.function),
        report.kind,
        report.stack,
        member,
        "report",
        report.site,
    )
