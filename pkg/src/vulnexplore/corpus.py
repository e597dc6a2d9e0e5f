"""Fuzz corpora with parent-mutation links, execution-slice traces and coversets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .errors import VulnExploreError


class CorpusError(VulnExploreError):
    module = "corpus"


class ManifestError(CorpusError):
    pass


class TraceFormatError(CorpusError):
    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class NoParent(CorpusError):
    pass


@dataclass(frozen=True, order=True)
class FunctionKey:
    file: str
    function: str

    def __post_init__(self):
        if not self.file or not self.function:
            raise ValueError("FunctionKey fields must be non-empty")

    def __str__(self) -> str:
        return f"{self.file}:{self.function}"


@dataclass(frozen=True)
class ExecutionSlice:
    lines: frozenset[tuple[str, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "lines", frozenset(self.lines))
        for _, line in self.lines:
            if line < 1:
                raise ValueError(f"slice line {line} < 1")

    def __len__(self) -> int:
        return len(self.lines)

    def __contains__(self, item: tuple[str, int]) -> bool:
        return item in self.lines


@dataclass(frozen=True)
class Coverset:
    """Functions entered by at least one corpus input; membership is a hash lookup."""

    functions: frozenset[FunctionKey] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "functions", frozenset(self.functions))

    def __contains__(self, key: FunctionKey) -> bool:
        return key in self.functions

    def __len__(self) -> int:
        return len(self.functions)

    def __or__(self, other: "Coverset") -> "Coverset":
        return Coverset(self.functions | other.functions)


MANIFEST_KEYS = ("id", "parent_id", "input_path", "trace_path", "crash", "report_path")


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    parent_id: Optional[str]
    input_path: Path
    trace_path: Path
    crash: bool
    report_path: Optional[Path] = None

    def __post_init__(self):
        if self.crash != (self.report_path is not None):
            raise ManifestError(f"entry {self.id!r}: report_path must be present iff crash")

    def to_json(self, base: Path | None = None) -> dict:
        def rel(p: Optional[Path]) -> Optional[str]:
            if p is None:
                return None
            if base is not None:
                try:
                    return Path(p).relative_to(base).as_posix()
                except ValueError:
                    pass
            return Path(p).as_posix()

        return {
            "id": self.id,
            "parent_id": self.parent_id,
            "input_path": rel(self.input_path),
            "trace_path": rel(self.trace_path),
            "crash": self.crash,
            "report_path": rel(self.report_path),
        }


@dataclass(frozen=True)
class FuzzCorpus:
    entries: dict[str, CorpusEntry]
    manifest_path: Optional[Path] = None

    def __post_init__(self):
        if not self.entries:
            raise ManifestError("corpus has no entries")
        for entry in self.entries.values():
            if entry.parent_id is not None and entry.parent_id not in self.entries:
                raise ManifestError(f"entry {entry.id!r}: dangling parent {entry.parent_id!r}")
        for entry in self.entries.values():
            seen = {entry.id}
            cur = entry
            while cur.parent_id is not None:
                if cur.parent_id in seen:
                    raise ManifestError(f"entry {entry.id!r}: parent links form a cycle")
                seen.add(cur.parent_id)
                cur = self.entries[cur.parent_id]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries[k] for k in sorted(self.entries))

    def crashes(self) -> list[CorpusEntry]:
        return [e for e in self if e.crash]


def _parse_entry(obj: object, base: Path, where: str) -> CorpusEntry:
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: expected a JSON object")
    keys = set(obj)
    if keys != set(MANIFEST_KEYS):
        missing = sorted(set(MANIFEST_KEYS) - keys)
        extra = sorted(keys - set(MANIFEST_KEYS))
        raise ManifestError(f"{where}: bad keys (missing {missing}, unexpected {extra})")
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise ManifestError(f"{where}: id must be a non-empty string")
    if obj["parent_id"] is not None and not isinstance(obj["parent_id"], str):
        raise ManifestError(f"{where}: parent_id must be a string or null")
    if not isinstance(obj["crash"], bool):
        raise ManifestError(f"{where}: crash must be a boolean")

    def path(key: str) -> Optional[Path]:
        value = obj[key]
        if value is None:
            return None
        if not isinstance(value, str):
            raise ManifestError(f"{where}: {key} must be a string")
        return base / value

    input_path, trace_path = path("input_path"), path("trace_path")
    if input_path is None or trace_path is None:
        raise ManifestError(f"{where}: input_path and trace_path are required")
    try:
        return CorpusEntry(obj["id"], obj["parent_id"], input_path, trace_path, obj["crash"], path("report_path"))
    except ManifestError as exc:
        raise ManifestError(f"{where}: {exc.message}") from None


def load_corpus(manifest: str | Path) -> FuzzCorpus:
    """Read a JSON Lines manifest; relative paths resolve against its directory."""
    manifest = Path(manifest)
    base = manifest.parent
    entries: dict[str, CorpusEntry] = {}
    try:
        text = manifest.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {manifest}: {exc.strerror}") from None
    for line_no, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            continue
        where = f"{manifest}:{line_no}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{where}: invalid JSON ({exc.msg})") from None
        entry = _parse_entry(obj, base, where)
        if entry.id in entries:
            raise ManifestError(f"{where}: duplicate id {entry.id!r}")
        entries[entry.id] = entry
    return FuzzCorpus(entries, manifest)


def write_manifest(corpus: FuzzCorpus | Iterable[CorpusEntry], path: str | Path) -> None:
    path = Path(path)
    entries = list(corpus)
    base = path.parent
    text = "".join(json.dumps(e.to_json(base)) + "\n" for e in sorted(entries, key=lambda e: e.id))
    path.write_text(text, encoding="utf-8", newline="\n")


def read_trace(path: str | Path) -> tuple[ExecutionSlice, frozenset[FunctionKey]]:
    """Parse a trace file into its ``L`` (line) and ``F`` (function) records."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TraceFormatError(str(path), 0, f"cannot read trace: {exc.strerror}") from None
    lines: set[tuple[str, int]] = set()
    functions: set[FunctionKey] = set()
    for line_no, raw in enumerate(text.split("\n"), 1):
        if not raw:
            continue
        tag, _, rest = raw.partition(" ")
        head, _, tail = rest.rpartition(" ")
        if tag not in ("L", "F") or not head or not tail:
            raise TraceFormatError(str(path), line_no, f"malformed record {raw!r}")
        if tag == "L":
            if not tail.isdigit() or int(tail) < 1:
                raise TraceFormatError(str(path), line_no, f"bad line number {tail!r}")
            lines.add((head, int(tail)))
        else:
            functions.add(FunctionKey(head, tail))
    return ExecutionSlice(frozenset(lines)), frozenset(functions)


def obtain_slice(entry: CorpusEntry) -> ExecutionSlice:
    """Lines executed by the entry's input, as recorded in its trace file."""
    return read_trace(entry.trace_path)[0]


def obtain_parent_mutation(entry: CorpusEntry, corpus: FuzzCorpus) -> CorpusEntry:
    """Nearest ancestor of ``entry`` whose input did not crash."""
    if entry.id not in corpus.entries:
        raise CorpusError(f"entry {entry.id!r} is not in the corpus")
    cur = entry
    while cur.parent_id is not None:
        cur = corpus.entries[cur.parent_id]
        if not cur.crash:
            return cur
    raise NoParent(f"entry {entry.id!r} has no non-crashing ancestor")


def compute_coverset(corpus: FuzzCorpus | Iterable[CorpusEntry]) -> Coverset:
    functions: set[FunctionKey] = set()
    for entry in corpus:
        functions |= read_trace(entry.trace_path)[1]
    return Coverset(frozenset(functions))
