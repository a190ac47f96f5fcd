import pytest

from dramnet import fixtures

# criterion text -> [passed cases, total cases], in first-seen order
_CRITERIA: dict[str, list[int]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(text): acceptance criterion checked by this test")


@pytest.fixture(scope="session")
def models():
    return fixtures.load_all()


def pytest_runtest_logreport(report):
    marker = dict(report.user_properties).get("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        tally = _CRITERIA.setdefault(marker, [0, 0])
        tally[0] += report.outcome == "passed"
        tally[1] += 1


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for text, (passed, total) in _CRITERIA.items():
        status = "PASS" if passed == total else "FAIL"
        terminalreporter.write_line(f"{status}  {text}  [{passed}/{total} cases]")
