"""Shared corpora for the test suite.

The random corpus is seeded once and reused session-wide; acceptance
criteria and unit tests must see the same distributions.
"""

import numpy as np
import pytest

from whlab import LatticeDist, TruncatedData, lattice, truncated_data
from whlab.generators import power_tail_pair

CORPUS_SEED = 20260815

acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


def random_corpus(count: int, seed: int = CORPUS_SEED) -> list[LatticeDist]:
    """Proper distributions with windows inside [-5, 5] straddling zero."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        lo = int(rng.integers(-5, 0))
        hi = int(rng.integers(1, 6))
        w = rng.random(hi - lo + 1)
        w /= w.sum()
        out.append(lattice(lo, w))
    return out


@pytest.fixture(scope="session")
def corpus100() -> list[LatticeDist]:
    return random_corpus(100)


@pytest.fixture(scope="session")
def corpus100_data(corpus100) -> list[TruncatedData]:
    return [truncated_data(mu, 200) for mu in corpus100]


@pytest.fixture(scope="session")
def p5_dist() -> LatticeDist:
    return power_tail_pair(cutoff=200).dist


@pytest.fixture(scope="session")
def p5_data(p5_dist) -> TruncatedData:
    return truncated_data(p5_dist, 200)


@pytest.fixture(scope="session")
def ssrw() -> LatticeDist:
    return lattice(-1, [0.5, 0.0, 0.5])


@pytest.fixture(scope="session")
def ssrw_data(ssrw) -> TruncatedData:
    return truncated_data(ssrw, 200)
