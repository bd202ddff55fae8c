import re

ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {detail}"


def _order(key):
    m = re.match(r"(\d+)(.*)", str(key))
    return (int(m.group(1)), m.group(2)) if m else (10**9, str(key))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES, key=_order):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
