import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
    missing = [k for k in range(1, 11) if k not in results]
    if missing:
        terminalreporter.write_line("not run: " + ", ".join(f"AC{k}" for k in missing))
