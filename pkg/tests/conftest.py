"""Shared small graphs and oracles."""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from degest.graph import Graph, from_edges


def complete_graph(n: int) -> Graph:
    return from_edges(n, itertools.combinations(range(n), 2))


def path_graph(n: int) -> Graph:
    return from_edges(n, [(i, i + 1) for i in range(n - 1)])


def brute_common_neighbors(g: Graph, nodes=None) -> np.ndarray:
    """Double loop over node pairs and candidate neighbours, no matrix algebra."""
    nodes = list(range(g.num_nodes)) if nodes is None else list(nodes)
    nbr = [set() for _ in range(g.num_nodes)]
    for u, v in g.edges.tolist():
        nbr[u].add(v)
        nbr[v].add(u)
    out = np.zeros((len(nodes), len(nodes)), dtype=np.int64)
    for a, i in enumerate(nodes):
        for b, j in enumerate(nodes):
            if i == j:
                out[a, b] = len(nbr[i])
            else:
                out[a, b] = sum(1 for w in range(g.num_nodes) if w in nbr[i] and w in nbr[j])
    return out


def random_graph(rng: np.random.Generator, n: int, density: float) -> Graph:
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return from_edges(n, pairs)


# Six nodes: triangle 0-1-2, pendant edge 4-5, plus edges closing a
# second cycle.  Nodes 0 and 4 are not adjacent and share neighbour 1.
MOMENT_EDGES = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (1, 4), (4, 5)]


@pytest.fixture
def moment_graph() -> Graph:
    return from_edges(6, MOMENT_EDGES)


@pytest.fixture
def k3() -> Graph:
    return complete_graph(3)


@pytest.fixture
def p3() -> Graph:
    return path_graph(3)


# One verdict line per acceptance criterion, echoed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    def record(number: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
