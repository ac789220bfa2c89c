import pytest

_VERDICTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    tag = getattr(item.function, "criterion", None)
    if tag is not None and rep.when == "call":
        _VERDICTS[tag] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for (num, label), passed in sorted(_VERDICTS.items()):
        terminalreporter.write_line(
            "criterion %d: %s  %s" % (num, "PASS" if passed else "FAIL", label))
