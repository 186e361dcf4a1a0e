import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from twostep_qkd.harness import run_experiment  # noqa: E402


@pytest.fixture(scope="session")
def experiment():
    """Memoized ``run_experiment`` so the large runs happen once per session."""
    cache = {}

    def run(scenario, n, seed, keep_records=True):
        key = (scenario, n, seed)
        if key not in cache:
            cache[key] = run_experiment(scenario, n, seed, keep_records=keep_records)
        return cache[key]

    return run


ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion; the terminal summary prints them all."""

    def check(number, title, ok, detail=""):
        ACCEPTANCE_RESULTS.append((number, title, bool(ok), detail))
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}: {detail}")
