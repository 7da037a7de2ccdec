import pytest

_outcomes = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.module.__name__ == "test_acceptance" and item.name in item.module.CRITERIA:
        if report.when == "call" or report.failed:
            _outcomes.setdefault(item.name, (item.module.CRITERIA[item.name], report.passed))
            if report.failed:
                _outcomes[item.name] = (item.module.CRITERIA[item.name], False)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, (text, passed) in sorted(_outcomes.items(), key=lambda kv: kv[1][0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {text}")
