from __future__ import annotations

import pytest

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the PASS/FAIL line of an acceptance criterion and echo it."""

    def record(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[n] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
