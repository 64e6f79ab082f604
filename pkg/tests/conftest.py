import numpy as np
import pytest

from mgsim.config import SystemConfig, Ring
from mgsim.physics import CircuitParams, agent_powers
from mgsim.state import Trace

_CRITERIA = []


def synthetic_trace(config, a_rows, S_rows=None):
    """Trace built directly from a (rows, N) load matrix, with exact powers."""
    a_rows = np.asarray(a_rows, dtype=np.int32)
    rows, N = a_rows.shape
    assert N == config.N
    cp = CircuitParams.from_config(config)
    tr = Trace.allocate(config.replace(T=rows - 1, burn_in=0), rows)
    tr.a[:] = a_rows
    tr.n[:] = a_rows.sum(axis=1)
    tr.P[:] = np.stack([agent_powers(a_rows[t].astype(np.int64), int(tr.n[t]), cp) for t in range(rows)])
    if S_rows is not None:
        tr.S[:] = S_rows
    return tr


@pytest.fixture
def small_config():
    return SystemConfig(N=4, topology=Ring(), T=10, burn_in=0)


@pytest.fixture
def report():
    """Record one acceptance criterion outcome; printed in the terminal summary."""

    def _report(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
