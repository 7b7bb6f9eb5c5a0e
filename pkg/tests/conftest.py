import pytest

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, text): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "slow: long-running Monte Carlo test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _acceptance[number] = (status, text, round(rep.duration, 1))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        status, text, secs = _acceptance[number]
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {text} ({secs} s)")
