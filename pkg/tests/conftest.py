import pytest

from semiharm.quadrature import RuleSizes


@pytest.fixture
def small2():
    """Reduced m = 2 rule used where full defaults would be slow."""
    return RuleSizes(24, 16)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
