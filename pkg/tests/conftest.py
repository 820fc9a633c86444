import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report(pytestconfig):
    """Record, echo and assert one acceptance line ``PASS #k ...`` / ``FAIL #k ...``."""
    tr = pytestconfig.pluginmanager.get_plugin("terminalreporter")

    def _report(k, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} #{k} {detail}"
        ACCEPTANCE_LINES.append(line)
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        assert passed, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].lstrip("#"))):
            terminalreporter.write_line(line)
