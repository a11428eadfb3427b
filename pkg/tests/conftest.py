import numpy as np
import pytest

from bifjet import kernels
from bifjet.problem_io import BUILTINS

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    contract, contract_free = kernels.backends()[request.param]
    monkeypatch.setattr(kernels, "contract", contract)
    monkeypatch.setattr(kernels, "contract_free", contract_free)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def pitchfork():
    return BUILTINS["pitchfork"].problem


@pytest.fixture
def tangential():
    return BUILTINS["tangential"].problem


@pytest.fixture
def cusp():
    return BUILTINS["cusp"].problem


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
