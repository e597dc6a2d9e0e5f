from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import program
from vulnexplore.corpus import FunctionKey, read_trace
from vulnexplore.fixtures import load_fixture_tus
from vulnexplore.interp import (
    CrashReport,
    Frame,
    InterpError,
    RuntimeLimit,
    UndefinedName,
    execute,
    fnv1a64,
    format_report,
    trace_lines,
    write_report,
    write_trace,
)
from vulnexplore.localize import parse_crash_report


def run(tus, data: bytes, entry: str = "f", **kw):
    return execute(tus[0], tus[1:], data, entry, **kw)


@pytest.fixture(scope="module")
def motivating():
    return load_fixture_tus("motivating")


@pytest.fixture(scope="module")
def udp():
    return load_fixture_tus("udp")


# published FNV-1a 64 test vectors, computed independently from the offset basis and prime
@pytest.mark.parametrize(
    "data, expected",
    [
        (b"", 0xCBF29CE484222325),
        (b"a", 0xAF63DC4C8601EC8C),
        (b"foobar", 0x85944171F73967E8),
        (b"open sesame", 0x973571B0F8A8C691),
    ],
)
def test_fnv1a64_vectors(data, expected):
    assert fnv1a64(data) == expected


def test_doom_crashes_at_the_fuzzed_abort(motivating):
    r = run(motivating, b"doom", "parse")
    assert r.crash is not None and r.crash.kind == "abort"
    assert (r.crash.site.line, r.crash.site.column) == (9, 9)
    assert ("test.mc", 9) in r.slice


def test_doo_runs_clean_and_misses_both_crash_lines(motivating):
    r = run(motivating, b"doo", "parse")
    assert r.crash is None and r.exit_code == 0
    assert ("test.mc", 9) not in r.slice and ("test.mc", 17) not in r.slice
    assert r.functions == {FunctionKey("test.mc", "parse")}


def test_hash_gate_opens_only_for_the_preimage(motivating):
    r = run(motivating, b"open sesame", "parse")
    assert r.crash.kind == "abort" and r.crash.site.line == 17
    assert [f.function for f in r.crash.stack] == ["parse_hashed", "parse"]
    assert run(motivating, b"open sesamE", "parse").crash is None


def test_udp_short_packet_overreads_the_length_field(udp):
    r = run(udp, b"\x11abc", "parse_l4")
    assert r.crash.kind == "buffer-overflow-read"
    assert r.crash.top == Frame("check_l4_udp", "udp.mc", 12, 27)
    assert r.crash.stack[1] == Frame("parse_l4", "udp.mc", 22, 16)


def test_udp_long_enough_packet_is_fine(udp):
    r = run(udp, b"\x11" + bytes(8), "parse_l4")
    assert r.crash is None and r.exit_code == 1


def test_overflow_write_is_reported():
    tus = program("int f(char *buf, size_t len) {\n    buf[len] = 1;\n    return 0;\n}\n")
    r = run(tus, b"ab")
    assert r.crash.kind == "buffer-overflow-write" and r.crash.site.line == 2


def test_local_arrays_are_bounds_checked_too():
    tus = program("int f(char *buf, size_t len) {\n    char t[4];\n    return t[len];\n}\n")
    assert run(tus, b"abc").crash is None
    assert run(tus, b"abcd").crash.kind == "buffer-overflow-read"


def test_assert_failure_and_success():
    tus = program("int f(char *buf, size_t len) {\n    assert(len < 3);\n    return 7;\n}\n")
    assert run(tus, b"ab").exit_code == 7
    r = run(tus, b"abc")
    assert r.crash.kind == "assertion-failure" and r.crash.site.line == 2


def test_uninitialized_locals_read_zero():
    tus = program("int f(char *buf, size_t len) {\n    int k;\n    long t[2];\n    return k + t[1];\n}\n")
    assert run(tus, b"").exit_code == 0


def test_arithmetic_is_64_bit_and_loads_respect_type_width():
    src = """int f(char *buf, size_t len) {
    long big = 9223372036854775807;
    big = big + 1;
    short s = buf[0] * 256 + buf[1];
    if (big < 0)
        return s;
    return 0;
}
"""
    r = run(program(src), b"\x01\x02")
    assert r.exit_code == 258


def test_while_loop_and_budget():
    tus = program("int f(char *buf, size_t len) {\n    int i = 0;\n    while (i < len)\n        i = i + 1;\n    return i;\n}\n")
    assert run(tus, b"hello").exit_code == 5
    spin = program("int f(char *buf, size_t len) {\n    while (1) { }\n    return 0;\n}\n")
    with pytest.raises(RuntimeLimit):
        run(spin, b"", budget=10_000)


def test_undefined_call_is_an_error():
    tus = program("int f(char *buf, size_t len) {\n    return g(len);\n}\n")
    with pytest.raises(UndefinedName):
        run(tus, b"")


def test_missing_entry_and_bad_signature():
    tus = program("int f(int a) { return a; }")
    with pytest.raises(UndefinedName):
        run(tus, b"", "main")
    with pytest.raises(InterpError):
        run(tus, b"", "f")


def test_memcpy_and_strcpy_are_bounds_checked():
    src = """int f(char *buf, size_t len) {
    char dst[4];
    memcpy(dst, buf, len);
    return dst[0];
}
"""
    tus = program(src)
    assert run(tus, b"abcd").exit_code == ord("a")
    assert run(tus, b"abcde").crash.kind == "buffer-overflow-write"


def test_struct_value_fields_and_globals():
    src = """struct p { int a; int b; };
int counter;
int bump(int by) {
    counter = counter + by;
    return counter;
}
int f(char *buf, size_t len) {
    struct p v;
    v.a = 3;
    v.b = bump(4);
    return v.a + v.b + bump(1);
}
"""
    assert run(program(src), b"").exit_code == 12


# traces and reports --------------------------------------------------------------


def test_trace_for_empty_slice_has_one_function_line(tmp_path):
    from vulnexplore.corpus import ExecutionSlice
    from vulnexplore.interp import RunResult

    result = RunResult(0, None, ExecutionSlice(), frozenset({FunctionKey("a.mc", "f")}))
    write_trace(result, tmp_path / "t")
    assert (tmp_path / "t").read_bytes() == b"F a.mc f\n"


def test_doom_trace_contains_the_abort_line(motivating, tmp_path):
    r = run(motivating, b"doom", "parse")
    write_trace(r, tmp_path / "t")
    text = (tmp_path / "t").read_text()
    assert "L test.mc 9\n" in text
    assert text.split("\n")[:-1] == sorted(set(text.split("\n")[:-1]))
    assert read_trace(tmp_path / "t") == (r.slice, r.functions)


def test_one_frame_abort_report_is_two_lines(motivating):
    r = run(motivating, b"doom", "parse")
    assert format_report(r.crash) == "ERROR: MiniSan: abort at test.mc:9:9\n#0 in parse test.mc:9:9\n"


def test_udp_report_round_trips(udp, tmp_path):
    r = run(udp, b"\x11abc", "parse_l4")
    write_report(r.crash, tmp_path / "r")
    back = parse_crash_report((tmp_path / "r").read_text())
    assert back == r.crash and back.top.function == "check_l4_udp"


@pytest.mark.parametrize(
    "name, data",
    [("motivating", b"doom"), ("motivating", b"open sesame"), ("udp", b"\x11abc"), ("assert", b"\x01\x09")],
)
def test_crash_stack_locations_lie_in_the_slice(name, data):
    from vulnexplore.fixtures import FIXTURES

    tus = load_fixture_tus(name)
    r = run(tus, data, FIXTURES[name].entry)
    assert (r.crash.site.file, r.crash.site.line) in r.slice
    for fr in r.crash.stack:
        assert (fr.file, fr.line) in r.slice
    assert r.crash.top.line == r.crash.site.line


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=12))
def test_execution_is_deterministic_and_unperturbed_by_tracing(data):
    tus = load_fixture_tus("udp")
    a = run(tus, data, "parse_l4")
    b = run(tus, data, "parse_l4")
    assert a == b
    assert trace_lines(a) == trace_lines(b)
    if a.crash is not None:
        assert (a.crash.site.file, a.crash.site.line) in a.slice


def test_crash_report_validates_fields():
    from vulnexplore.frontend import SourceLocation

    with pytest.raises(ValueError):
        CrashReport("segfault", SourceLocation("a.mc", 1, 1), (Frame("f", "a.mc", 1, 1),))
    with pytest.raises(ValueError):
        CrashReport("abort", SourceLocation("a.mc", 1, 1), ())
