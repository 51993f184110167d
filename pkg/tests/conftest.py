import pytest

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    num, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    prev = _OUTCOMES.get(num, (title, True, ""))
    _OUTCOMES[num] = (title, prev[1] and rep.passed, detail or prev[2])


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_OUTCOMES):
        title, ok, detail = _OUTCOMES[num]
        line = f"criterion {num} ({title}): {'PASS' if ok else 'FAIL'}"
        terminalreporter.write_line(line + (f" - {detail}" if detail else ""))
