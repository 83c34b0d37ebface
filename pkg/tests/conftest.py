from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from timerate.model import Channel, NetworkProblem, TimeConstraints
from timerate.specfile import load_spec

SPECS = Path(__file__).resolve().parent.parent / "specs"


def spec_path(name: str) -> Path:
    return SPECS / f"{name}.yaml"


@pytest.fixture
def erasure_bc():
    return load_spec(spec_path("erasure_broadcast"))


def trivial_channel(ell: int) -> Channel:
    # binary inputs, silent outputs: enough for purely combinatorial checks
    return Channel((2,) * ell, (1,) * ell, np.ones((2**ell, 1)))


@st.composite
def random_problems(draw, max_k=3, max_ell=4, times=(0.25, 0.5, 1.0)):
    """Valid (problem, sigma) pairs with at most len(times) distinct deadlines."""
    k = draw(st.integers(1, max_k))
    ell = draw(st.integers(2, max_ell))
    H = np.zeros((k, ell), dtype=int)
    S = np.zeros((k, ell), dtype=int)
    for i in range(k):
        holder = draw(st.integers(0, ell - 1))
        H[i, holder] = 1
        for j in range(ell):
            if j != holder:
                H[i, j] = draw(st.integers(0, 1)) if draw(st.booleans()) and draw(st.booleans()) else 0
        demanders = [j for j in range(ell) if draw(st.booleans())]
        if not demanders:
            demanders = [draw(st.integers(0, ell - 1))]
        S[i, demanders] = 1
    entries = {(i, j): draw(st.sampled_from(times)) for i in range(k) for j in range(ell) if S[i, j]}
    return NetworkProblem(trivial_channel(ell), k, H, S), TimeConstraints(entries)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
