import sys

import numpy as np
import pytest

from fairmatch import make_instance


@pytest.fixture
def k22():
    """Complete 2x2 instance, T = 2."""
    return make_instance(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)])


@pytest.fixture
def path3():
    """Two agents, two types, edges forming a path; T = 2."""
    return make_instance(2, 2, [(0, 0), (0, 1), (1, 1)])


def random_instance(rng, max_side=5, with_groups=False, weighted=False):
    """Small random canonical instance for property loops."""
    n_i = int(rng.integers(1, max_side + 1))
    n_j = int(rng.integers(1, max_side + 1))
    edges = [(i, j) for i in range(n_i) for j in range(n_j)
             if rng.random() < 0.6]
    if not edges:
        edges = [(int(rng.integers(n_i)), int(rng.integers(n_j)))]
    weights = tuple(float(w) for w in rng.uniform(0.1, 1.0, n_i)) \
        if weighted else None
    groups = None
    if with_groups:
        k = int(rng.integers(1, n_i + 1))
        parts = np.array_split(rng.permutation(n_i), k)
        groups = [tuple(int(v) for v in p) for p in parts if len(p)]
    return make_instance(n_i, n_j, edges, weights=weights,
                         groups=groups or ())


def assert_serialized_equal(a, b):
    from fairmatch import instance_to_json
    assert instance_to_json(a) == instance_to_json(b)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines after the run summary."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None) if module else None
    if not lines:
        return
    terminalreporter.section("acceptance verdicts")
    for line in lines:
        terminalreporter.write_line(line)
