import numpy as np
import pytest

from onebit.model import ProblemInstance

_ACCEPTANCE_LINES = []


def record_criterion(name, passed, detail=""):
    """Register a PASS/FAIL/WARN line for the acceptance summary."""
    status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
    _ACCEPTANCE_LINES.append(f"[{status}] {name}" + (f": {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_instance(rng, m, n):
    A = rng.standard_normal((m, n))
    b = rng.choice([-1.0, 1.0], size=m)
    return ProblemInstance(A, b)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
