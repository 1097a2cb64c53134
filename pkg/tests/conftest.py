from __future__ import annotations

import pytest

from dressed_cnot.dynamics import IntegratorConfig, compute_transfer_matrix
from dressed_cnot.hamiltonians import SystemParams
from dressed_cnot.pulses import PulseParams

# criterion number -> (passed, message); filled by test_acceptance.py
ACCEPTANCE_REPORT: dict[int | str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def defaults():
    return SystemParams(), PulseParams()


@pytest.fixture(scope="session")
def default_transfer(defaults):
    sp, p = defaults
    return compute_transfer_matrix(sp, p, IntegratorConfig())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_REPORT, key=str):
        passed, msg = ACCEPTANCE_REPORT[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {msg}")
