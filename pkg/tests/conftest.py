"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[dict]()


class CriterionRecord:
    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.details: list[str] = []

    def note(self, text: str) -> None:
        self.details.append(text)


@pytest.fixture
def criterion(request):
    results = request.config.stash.setdefault(_RESULTS, {})

    @contextmanager
    def record(number: int, title: str):
        rec = CriterionRecord(number, title)
        try:
            yield rec
        except BaseException:
            results[number] = ("FAIL", rec)
            raise
        results[number] = ("PASS", rec)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, rec = results[number]
        detail = "; ".join(rec.details)
        terminalreporter.write_line(f"criterion {number}: {status}: {rec.title} ({detail})")
