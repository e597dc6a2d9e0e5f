"""Bundled MiniC fixtures with small fuzz corpora.

Each fixture directory holds its sources, ``inputs/``, and the ``traces/``,
``reports/`` and ``manifest.jsonl`` produced by replaying those inputs.
Source names inside traces are the bare file names, so fixtures are loaded
through :func:`load_fixture_tus` rather than by path.
"""

from __future__ import annotations

import random
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..corpus import CorpusEntry, FuzzCorpus, load_corpus, write_manifest
from ..frontend import TranslationUnit, load_program
from ..interp import execute, write_report, write_trace

ROOT = Path(__file__).resolve().parent


@dataclass(frozen=True)
class FixtureSpec:
    name: str
    sources: tuple[str, ...]
    entry: str
    # (id, parent id, input bytes)
    seeds: tuple[tuple[str, Optional[str], bytes], ...] = ()


FIXTURES = {
    "motivating": FixtureSpec(
        "motivating",
        ("test.mc",),
        "parse",
        (("000", None, b"doo"), ("001", "000", b"doom")),
    ),
    "udp": FixtureSpec(
        "udp",
        ("udp.mc", "pinctrl.mc"),
        "parse_l4",
        (("000", None, b"A"), ("001", "000", b"\x11abc")),
    ),
    "assert": FixtureSpec(
        "assert",
        ("lookup.mc",),
        "parse",
        (("000", None, b"\x00\x00"), ("001", "000", b"\x01\x09")),
    ),
    "taint-unguarded": FixtureSpec("taint", ("unguarded.mc",), "copy_payload"),
    "taint-guarded": FixtureSpec("taint", ("guarded.mc",), "copy_payload"),
}

CORPUS_FIXTURES = ("motivating", "udp", "assert")


def fixture_dir(name: str) -> Path:
    return ROOT / FIXTURES[name].name


def fixture_sources(name: str) -> dict[str, str]:
    spec = FIXTURES[name]
    return {s: (fixture_dir(name) / s).read_text(encoding="utf-8") for s in spec.sources}


def load_fixture_tus(name: str) -> list[TranslationUnit]:
    spec = FIXTURES[name]
    return load_program(list(spec.sources), fixture_sources(name))


def load_fixture_corpus(name: str) -> FuzzCorpus:
    return load_corpus(fixture_dir(name) / "manifest.jsonl")


def replay(
    tus: list[TranslationUnit],
    entry: str,
    seeds: list[tuple[str, Optional[str], bytes]],
    dest: Path,
) -> Path:
    """Write inputs, traces, reports and manifest for ``seeds`` under ``dest``."""
    for sub in ("inputs", "traces", "reports"):
        (dest / sub).mkdir(parents=True, exist_ok=True)
    entries = []
    for id_, parent, data in seeds:
        inp, trace = dest / "inputs" / id_, dest / "traces" / f"{id_}.trace"
        inp.write_bytes(data)
        result = execute(tus[0], tus[1:], data, entry)
        write_trace(result, trace)
        report = None
        if result.crash is not None:
            report = dest / "reports" / f"{id_}.report"
            write_report(result.crash, report)
        entries.append(CorpusEntry(id_, parent, inp, trace, result.crash is not None, report))
    manifest = dest / "manifest.jsonl"
    write_manifest(entries, manifest)
    return manifest


def materialize(name: str, dest: Path, seeds=None) -> Path:
    """Copy a fixture's sources to ``dest`` and replay its corpus there; returns the manifest.

    Run the CLI from ``dest`` with bare source names to reproduce trace names.
    """
    spec = FIXTURES[name]
    dest.mkdir(parents=True, exist_ok=True)
    for s in spec.sources:
        shutil.copyfile(fixture_dir(name) / s, dest / s)
    return replay(load_fixture_tus(name), spec.entry, list(seeds if seeds is not None else spec.seeds), dest)


def mutated_seeds(name: str, count: int, seed: int = 0) -> list[tuple[str, Optional[str], bytes]]:
    """``count`` inputs grown from the fixture seeds by byte mutation, each linked to its parent."""
    rng = random.Random(seed)
    seeds = list(FIXTURES[name].seeds)
    while len(seeds) < count:
        parent_id, _, data = rng.choice(seeds)
        buf = bytearray(data)
        op = rng.randrange(3)
        if op == 0 and buf:
            buf[rng.randrange(len(buf))] = rng.randrange(256)
        elif op == 1 and len(buf) < 16:
            buf.insert(rng.randrange(len(buf) + 1), rng.randrange(256))
        elif buf:
            del buf[rng.randrange(len(buf))]
        seeds.append((f"{len(seeds):03d}", parent_id, bytes(buf)))
    return seeds


def regenerate() -> None:
    """Rebuild the bundled corpora in place."""
    for name in CORPUS_FIXTURES:
        spec = FIXTURES[name]
        d = fixture_dir(name)
        for sub in ("inputs", "traces", "reports"):
            shutil.rmtree(d / sub, ignore_errors=True)
        replay(load_fixture_tus(name), spec.entry, list(spec.seeds), d)

