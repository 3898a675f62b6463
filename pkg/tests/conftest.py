import pytest

_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def record_criterion(request):
    """Record one acceptance outcome; all of them are listed at the end of the run."""
    results = request.config.stash.setdefault(_CRITERIA, {})

    def record(number: int, passed: bool, detail: str) -> None:
        results[number] = (passed, detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
