from __future__ import annotations

from importlib.resources import files
from pathlib import Path

import pytest

FIXTURES = Path(str(files("stableponzi") / "fixtures"))

_criteria: list[tuple[str, bool, str]] = []


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with a label; failure is inferred."""
    label: list[str] = []

    def _set(text: str) -> None:
        label.append(text)

    yield _set
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    _criteria.append((label[0] if label else request.node.name, ok, request.node.name))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, _ in _criteria:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")
