"""Command-line entry point: ``vulnexplore <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .corpus import CorpusEntry, FuzzCorpus, compute_coverset, load_corpus, write_manifest
from .errors import VulnExploreError
from .explore import (
    OUTPUT_FORMATS,
    CliError,
    ExploreConfig,
    distinct_crashes,
    load_sources,
    render_report,
    run_explore,
)
from .frontend import dump_ast
from .interp import execute, write_report, write_trace
from .localize import localize_failure
from .rank import rank_matches
from .semantic import DEFAULT_SINKS
from .templates import TEMPLATE_RULES, derive_syntactic_template, match_template, parse_matcher, render_matcher, render_matches

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CRASH = 77


def _shared() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--sources", nargs="+", metavar="PATH", help="MiniC source files")
    p.add_argument("--entry", help="entry function taking (char *buf, size_t len)")
    p.add_argument("--manifest", type=Path, help="corpus manifest (JSON Lines)")
    p.add_argument("--format", choices=OUTPUT_FORMATS, default="text")
    p.add_argument(
        "--semantic",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="add callsite/taint matches (default: only for assertion failures)",
    )
    p.add_argument("--sinks", default=",".join(DEFAULT_SINKS), help="comma-separated taint sinks")
    p.add_argument("--template-rule", choices=TEMPLATE_RULES, default="auto")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for matching")
    p.add_argument("--timings", action="store_true", help="print per-stage wall-clock times to stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    shared = _shared()
    parser = argparse.ArgumentParser(prog="vulnexplore", description="Static vulnerability exploration for MiniC.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[shared], help="execute one input and write its trace/report")
    run.add_argument("--input", required=True, type=Path)
    run.add_argument("--trace", type=Path, help="trace output (default: <input>.trace)")
    run.add_argument("--report", type=Path, help="crash report output (default: <input>.report)")

    sub.add_parser("replay", parents=[shared], help="regenerate every trace/report of a manifest")

    loc = sub.add_parser("localize", parents=[shared], help="print the fault locus of each crash")
    loc.add_argument("--prefer", choices=("auto", "report", "dice"), default="auto")

    sub.add_parser("derive", parents=[shared], help="print the template derived for each crash")

    match = sub.add_parser("match", parents=[shared], help="match a template over the sources")
    match.add_argument("--template", required=True, help="matcher expression")

    rank = sub.add_parser("rank", parents=[shared], help="rank template matches by corpus coverage")
    rank.add_argument("--template", required=True, help="matcher expression")

    sub.add_parser("explore", parents=[shared], help="full pipeline over every distinct crash")
    sub.add_parser("dump-ast", parents=[shared], help="print the typed AST of each source")
    return parser


def _need(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise CliError(f"--{name.replace('_', '-')} is required for {args.command}")


def _emit(text: str) -> None:
    sys.stdout.write(text)


def cmd_run(args: argparse.Namespace) -> int:
    _need(args, "sources", "entry")
    tus = load_sources(args.sources)
    try:
        data = args.input.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read input {args.input}: {exc.strerror}") from None
    result = execute(tus[0], tus[1:], data, args.entry)
    trace = args.trace or args.input.with_name(args.input.name + ".trace")
    write_trace(result, trace)
    if result.crash is not None:
        report = args.report or args.input.with_name(args.input.name + ".report")
        write_report(result.crash, report)
        return EXIT_CRASH
    return EXIT_OK


def replay_corpus(corpus: FuzzCorpus, manifest: Path, tus, entry: str) -> list[str]:
    """Re-run every input, rewriting traces, reports and the manifest; returns per-entry errors."""
    errors: list[str] = []
    updated: list[CorpusEntry] = []
    for e in corpus:
        try:
            result = execute(tus[0], tus[1:], Path(e.input_path).read_bytes(), entry)
        except (VulnExploreError, OSError) as exc:
            errors.append(f"entry {e.id}: {getattr(exc, 'message', None) or exc}")
            updated.append(e)
            continue
        Path(e.trace_path).parent.mkdir(parents=True, exist_ok=True)
        write_trace(result, e.trace_path)
        report_path = None
        if result.crash is not None:
            report_path = e.report_path or manifest.parent / "reports" / f"{e.id}.report"
            Path(report_path).parent.mkdir(parents=True, exist_ok=True)
            write_report(result.crash, report_path)
        updated.append(CorpusEntry(e.id, e.parent_id, e.input_path, e.trace_path, result.crash is not None, report_path))
    write_manifest(updated, manifest)
    return errors


def cmd_replay(args: argparse.Namespace) -> int:
    _need(args, "sources", "entry", "manifest")
    tus = load_sources(args.sources)
    corpus = load_corpus(args.manifest)
    errors = replay_corpus(corpus, args.manifest, tus, args.entry)
    for msg in errors:
        print(f"error: cli: {msg}", file=sys.stderr)
    return EXIT_ERROR if errors else EXIT_OK


def _crash_loci(args: argparse.Namespace, prefer: str = "auto"):
    _need(args, "sources", "manifest")
    tus = load_sources(args.sources)
    corpus = load_corpus(args.manifest)
    for entry, _, _ in distinct_crashes(corpus):
        yield entry, tus, localize_failure(entry, corpus, tus, prefer)


def cmd_localize(args: argparse.Namespace) -> int:
    rows = []
    for entry, _, locus in _crash_loci(args, args.prefer):
        rows.append((entry.id, locus))
    if args.format == "json":
        doc = [
            {
                "id": i,
                "mode": loc.mode,
                "function": str(loc.focus_function),
                "lines": [f"{f}:{n}" for f, n in sorted(loc.lines)],
                "kind": loc.crash_kind,
            }
            for i, loc in rows
        ]
        _emit(json.dumps(doc, indent=2) + "\n")
    else:
        _emit("".join(f"crash {i}\n" + "".join(s + "\n" for s in loc.summary()) for i, loc in rows))
    return EXIT_OK


def cmd_derive(args: argparse.Namespace) -> int:
    rows = []
    for entry, tus, locus in _crash_loci(args):
        rows.append((entry.id, render_matcher(derive_syntactic_template(tus, locus, args.template_rule))))
    if args.format == "json":
        _emit(json.dumps([{"id": i, "template": t} for i, t in rows], indent=2) + "\n")
    else:
        _emit("".join(f"{i} {t}\n" for i, t in rows))
    return EXIT_OK


def _matches(args: argparse.Namespace):
    _need(args, "sources")
    tus = load_sources(args.sources)
    return match_template(tus, parse_matcher(args.template), args.jobs)


def cmd_match(args: argparse.Namespace) -> int:
    matches = _matches(args)
    if args.format == "json":
        doc = [{"loc": str(m.loc), "function": str(m.enclosing_function), "snippet": m.snippet} for m in matches]
        _emit(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    else:
        _emit(render_matches(matches))
    return EXIT_OK


def cmd_rank(args: argparse.Namespace) -> int:
    _need(args, "manifest")
    matches = _matches(args)
    ranked = rank_matches(matches, compute_coverset(load_corpus(args.manifest)))
    if args.format == "json":
        doc = {"high": [str(m.loc) for m in ranked.high], "low": [str(m.loc) for m in ranked.low]}
        _emit(json.dumps(doc, indent=2) + "\n")
    else:
        lines = [f"high: {m.loc} {m.enclosing_function.function}" for m in ranked.high]
        lines += [f"low: {m.loc} {m.enclosing_function.function}" for m in ranked.low]
        _emit("".join(line + "\n" for line in lines))
    return EXIT_OK


def cmd_explore(args: argparse.Namespace) -> int:
    _need(args, "sources", "manifest")
    sinks = tuple(s for s in args.sinks.split(",") if s)
    config = ExploreConfig(
        tuple(args.sources),
        args.manifest,
        args.entry,
        args.template_rule,
        sinks,
        args.semantic,
        args.format,
        args.jobs,
    )
    report = run_explore(config)
    _emit(render_report(report, config.output))
    if args.timings:
        for stage in sorted(report.timings):
            print(f"timing {stage} {report.timings[stage]:.6f}s", file=sys.stderr)
    return EXIT_OK


def cmd_dump_ast(args: argparse.Namespace) -> int:
    _need(args, "sources")
    for tu in load_sources(args.sources):
        _emit(dump_ast(tu))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "replay": cmd_replay,
    "localize": cmd_localize,
    "derive": cmd_derive,
    "match": cmd_match,
    "rank": cmd_rank,
    "explore": cmd_explore,
    "dump-ast": cmd_dump_ast,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except VulnExploreError as exc:
        print(f"error: {exc.module}: {exc.message}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
