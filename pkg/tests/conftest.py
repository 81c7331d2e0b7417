"""Collects one pass/fail line per acceptance criterion and prints them at the end of the run."""

ACCEPTANCE_LINES: dict = {}


def record_criterion(key, ok: bool, detail: str):
    ACCEPTANCE_LINES[key] = f"{'PASS' if ok else 'FAIL'}  {detail}"


def _order(key):
    num, _, rest = str(key).partition("-")
    return (int(num) if num.isdigit() else 99, rest)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=_order):
        terminalreporter.write_line(f"criterion {key:<14} {ACCEPTANCE_LINES[key]}")
