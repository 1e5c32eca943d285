import pytest

acceptance_key = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[acceptance_key] = {}


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(acceptance_key, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record(request, capsys):
    """Log one criterion's verdict, echo it live, then assert it."""
    def _record(number, ok, detail):
        request.config.stash[acceptance_key][number] = (bool(ok), detail)
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, f"criterion {number}: {detail}"
    return _record
