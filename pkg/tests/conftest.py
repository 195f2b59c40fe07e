import pytest

# criterion number -> (title, list of outcomes of its tests)
_ACCEPTANCE = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None and mark.args:
            _ACCEPTANCE.setdefault(mark.args[0], (mark.args[1], []))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not mark.args:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _ACCEPTANCE[mark.args[0]][1].append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, results = _ACCEPTANCE[num]
        if not results:
            state = "NOT RUN"
        else:
            state = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"[{state}] criterion {num}: {title}")
