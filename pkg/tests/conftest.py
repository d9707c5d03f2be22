import pytest

RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion as a set of named checks, then assert them."""
    results = request.config.stash[RESULTS]

    def record(number, title, checks, detail=""):
        failed = [name for name, ok in checks.items() if not ok]
        note = detail + (f"; failed: {', '.join(failed)}" if failed else "")
        results[number] = (title, not failed, note)
        print(f"[{'PASS' if not failed else 'FAIL'}] criterion {number}: {title} ({note})")
        assert not failed, f"criterion {number} failed: {', '.join(failed)} ({detail})"

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok, note = results[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}: {note}")
