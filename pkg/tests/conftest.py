from __future__ import annotations

import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import pytest

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """``criterion(n, title, ok, detail)`` records one acceptance line and returns ``ok``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(n: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"[{n:2d}] {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
        lines.append((n, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
