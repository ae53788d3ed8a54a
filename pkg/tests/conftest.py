import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Append ``(criterion, passed, detail)``; the lines are printed after the run."""
    lines = request.config.stash[_LINES]

    def log(criterion, passed, detail):
        lines.append(f"criterion {criterion:<4} {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
