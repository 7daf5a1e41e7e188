from __future__ import annotations

import math

import pytest

from measengine.dynamics import DriveConfig, QubitConfig, ideal_qubit

GAMMA_C = 2 * math.pi * 383.0
OMEGA_OP = 2 * math.pi * 14.2e3
T_R_OP = 8e-6


@pytest.fixture
def ideal():
    return ideal_qubit()


@pytest.fixture
def device_qubit():
    return QubitConfig()


@pytest.fixture
def operating_drive():
    return DriveConfig(omega=OMEGA_OP, t_r=T_R_OP)


# Acceptance criteria register a one-line verdict here; the lines are printed
# at the end of the run whether or not output capture is enabled.
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])


@pytest.fixture
def record():
    """``record(n, ok, detail)``: register the verdict for criterion ``n`` and assert it."""

    def _record(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[n] = line
        assert ok, line

    return _record
