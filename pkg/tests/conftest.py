from __future__ import annotations


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, after the usual summary."""
    rows: dict[str, list] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(report, "user_properties", ()))
            if "criterion" not in props:
                continue
            row = rows.setdefault(props["criterion"], [True, ""])
            row[0] = row[0] and outcome == "passed"
            row[1] = row[1] or props.get("detail", "")
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(rows, key=lambda k: int(k.split(" ")[0])):
        ok, detail = rows[key]
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
