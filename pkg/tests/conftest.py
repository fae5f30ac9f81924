from __future__ import annotations

import numpy as np
import pytest

from pwsparse.dictionary import BlockPartition, Dictionary
from pwsparse.generators import derive_seed, union_general

# Lines appended by the acceptance tests; echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def random_union(seed: int, m_max: int = 16, n_blocks_max: int = 3) -> Dictionary:
    """Union of general bases with random size, block count, widths and mixing."""
    rng = np.random.default_rng(derive_seed(11, seed))
    m = int(rng.integers(2, m_max + 1))
    n_blocks = int(rng.integers(2, n_blocks_max + 1))
    widths = [int(w) for w in rng.integers(1, m + 1, size=n_blocks)]
    return union_general(m, n_blocks, float(rng.uniform(0, 1)), rng, widths)


@pytest.fixture
def ih4() -> Dictionary:
    """Identity next to the normalized 4x4 Hadamard matrix."""
    h = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]]) / 2.0
    return Dictionary(np.hstack([np.eye(4), h]), BlockPartition((4, 4)))
