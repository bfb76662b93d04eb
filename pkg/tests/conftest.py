# criterion id -> passed, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ACCEPTANCE[i] else 'FAIL'} criterion {i}")
