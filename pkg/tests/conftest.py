import pytest

from depcons.dataset import numeric_scale, review_scale


@pytest.fixture
def review():
    return review_scale()


@pytest.fixture
def k7():
    return numeric_scale(7)



# --- acceptance reporting -------------------------------------------------
# Tests marked ``@pytest.mark.criterion(n, "title")`` get one summary line
# each; extra measurements attached with ``record_property`` are appended.

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and not report.failed):
        return
    number, title = marker.args
    if report.when == "call" or number not in _CRITERIA:
        _CRITERIA[number] = (title, report.passed, dict(item.user_properties))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, props = _CRITERIA[number]
        extra = " ".join(f"{k}={v}" for k, v in props.items())
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}" + (f"  ({extra})" if extra else ""))
