import re

_outcomes = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_criterion_(\d+)_", report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    detail = dict(report.user_properties).get("criterion_summary", "")
    if report.when == "call" or report.failed:
        prev = _outcomes.get(number, ("PASS", ""))
        status = "FAIL" if report.failed or prev[0] == "FAIL" else ("SKIP" if report.skipped else "PASS")
        _outcomes[number] = (status, detail or prev[1])


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status, detail = _outcomes[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")
