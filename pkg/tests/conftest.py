import pytest

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, text): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _criteria[key] = (text, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria):
        text, status = _criteria[key]
        terminalreporter.write_line(f"criterion {key}: {status}  {text}")
