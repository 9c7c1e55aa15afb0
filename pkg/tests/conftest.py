"""Shared pytest configuration.

Registers a hypothesis profile without wall-clock deadlines (exact-arithmetic
examples vary widely in cost) and prints one PASS/FAIL line per acceptance
criterion in the terminal summary.
"""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "exact",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("exact")

_acceptance_results: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    _acceptance_results.append((report.nodeid.rsplit("::", 1)[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in sorted(_acceptance_results):
        label = name.removeprefix("test_").replace("_", " ")
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{label}: {status}")
