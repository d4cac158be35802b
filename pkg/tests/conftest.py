import itertools
import os
import sys

import numpy as np
import pytest

from graphcover.graph_core import LabeledGraph, make_graph, one_hot

sys.path.insert(0, os.path.dirname(__file__))


def random_graph(rng: np.random.Generator, n: int, d: int = 1, p: float = 0.4, max_degree: int | None = None) -> LabeledGraph:
    """Erdos-Renyi graph with uniformly random one-hot labels (d=1 gives the constant feature)."""
    pairs = list(itertools.combinations(range(n), 2))
    rng.shuffle(pairs)
    deg = [0] * n
    edges = []
    for u, v in pairs:
        if rng.random() < p and (max_degree is None or (deg[u] < max_degree and deg[v] < max_degree)):
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
    feats = one_hot([int(x) for x in rng.integers(0, d, n)], d) if d > 1 else None
    return make_graph(n, edges, feats)


def brute_isomorphic(g: LabeledGraph, h: LabeledGraph) -> bool:
    """Isomorphism by trying every vertex permutation."""
    if g.n != h.n or len(g.edges) != len(h.edges) or sorted(g.features) != sorted(h.features):
        return False
    for perm in itertools.permutations(range(g.n)):
        if g.relabel(perm) == h:
            return True
    return False


def naive_wl(graphs: list[LabeledGraph], iterations: int) -> list[list[str]]:
    """Textbook 1-WL run jointly over several graphs, colors as nested strings.

    Colors are never compressed, so equality is structural by construction.
    """
    colors = [[repr(x) for x in g.features] for g in graphs]
    adjs = [g.neighbors() for g in graphs]
    for _ in range(iterations):
        colors = [
            [f"({c[v]}|{','.join(sorted(c[w] for w in adj[v]))})" for v in range(len(c))]
            for c, adj in zip(colors, adjs)
        ]
    return colors


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def mutag_dir(tmp_path_factory):
    from mutag_like import write_mutag_like
    path = tmp_path_factory.mktemp("mutag") / "MUTAG_LIKE"
    write_mutag_like(str(path))
    return str(path)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
