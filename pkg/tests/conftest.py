import numpy as np
import pytest

from spectrakit.generators import random_tail_terms
from spectrakit.structured import make_operator
from spectrakit.tails import terms_rule


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_op(rng, n=None, real=False):
    """Small random structured operator with a fast-decaying tail."""
    n = int(rng.integers(0, 5)) if n is None else n
    B = None
    if n:
        B = rng.standard_normal((n, n))
        if not real:
            B = B + 1j * rng.standard_normal((n, n))
    a = rng.uniform(-2, 2) + (0 if real else 1j * rng.uniform(-2, 2))
    return make_operator(a, B, terms_rule(random_tail_terms(rng, 1.0, real=real)))


def hermitian_op(rng, n=None):
    n = int(rng.integers(1, 5)) if n is None else n
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return make_operator(rng.uniform(-2, 2), B + B.conj().T,
                         terms_rule(random_tail_terms(rng, 1.0)))


#: One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
