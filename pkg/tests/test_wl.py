import itertools
from collections import Counter
from fractions import Fraction

import pytest

from conftest import brute_isomorphic, naive_wl, random_graph
from graphcover.graph_core import (
    GraphCollection, complete_graph, cycle_graph, disjoint_union, empty_graph, make_graph, one_hot, path_graph,
    star_graph,
)
from graphcover.wl import (
    STABLE, _freq, mwl1_joint_indistinguishable, mwl1_refine, quotient_classes, wl1_joint_indistinguishable,
    wl1_refine,
)

C6 = cycle_graph(6)
TWO_C3 = disjoint_union(complete_graph(3), complete_graph(3))


def _partition(colors):
    groups = {}
    for v, c in enumerate(colors):
        groups.setdefault(c, set()).add(v)
    return {frozenset(s) for s in groups.values()}


def test_refine_examples():
    runs = wl1_refine(complete_graph(3))
    assert all(c.classes() == 1 for c in runs) and runs[-1].iteration == 1
    star = wl1_refine(star_graph(3))
    assert [c.classes() for c in star[1:]] == [2] * (len(star) - 1)


def test_joint_examples():
    assert wl1_joint_indistinguishable(C6, C6)
    assert wl1_joint_indistinguishable(C6, TWO_C3)
    assert not wl1_joint_indistinguishable(disjoint_union(complete_graph(3), empty_graph(1)), star_graph(3))
    assert mwl1_joint_indistinguishable(C6, TWO_C3)


def test_mean_cannot_count_leaves():
    # Root label 0, leaves {1, 2} against leaves {1, 1, 2, 2}.
    small = make_graph(3, [(0, 1), (0, 2)], one_hot([0, 1, 2], 3))
    big = make_graph(5, [(0, i) for i in range(1, 5)], one_hot([0, 1, 1, 2, 2], 3))
    u = disjoint_union(small, big)
    mean = mwl1_refine(u, 1)[1].colors
    assert mean[0] == mean[3]
    assert wl1_refine(u, 1)[1].colors[0] != wl1_refine(u, 1)[1].colors[3]


def test_quotient_examples():
    assert quotient_classes(GraphCollection([C6])) == [[0]]
    assert len(quotient_classes(GraphCollection([C6, TWO_C3, path_graph(6)]))) == 2


def test_freq_sets_are_exact():
    f = _freq([3, 3, 5, 7, 7, 7])
    assert sum(p for _, p in f) == 1
    assert dict(f) == {3: Fraction(1, 3), 5: Fraction(1, 6), 7: Fraction(1, 2)}
    assert all(6 % p.denominator == 0 for _, p in f)


@pytest.mark.parametrize("refine", [wl1_refine, mwl1_refine])
def test_refinement_monotone_and_bounded(refine, rng):
    for _ in range(40):
        g = random_graph(rng, int(rng.integers(1, 9)), d=int(rng.integers(1, 3)))
        runs = refine(g)
        assert runs[-1].iteration <= g.n
        for a, b in zip(runs, runs[1:]):
            pa = _partition(a.colors)
            assert all(any(cell <= big for big in pa) for cell in _partition(b.colors))
        assert len({c for r in runs for c in r.colors}) == sum(len(set(r.colors)) for r in runs)


def test_mean_partition_is_coarser(rng):
    for _ in range(40):
        g = random_graph(rng, int(rng.integers(2, 9)), d=2)
        for wl, mwl in zip(wl1_refine(g, 4), mwl1_refine(g, 4)):
            fine = _partition(wl.colors)
            assert all(any(cell <= big for big in _partition(mwl.colors)) for cell in fine)


def test_joint_matches_textbook_refinement(rng):
    for _ in range(150):
        n = int(rng.integers(2, 8))
        g, h = random_graph(rng, n, d=2), random_graph(rng, n, d=2)
        for L in range(4):
            same = all(Counter(naive_wl([g, h], t)[0]) == Counter(naive_wl([g, h], t)[1]) for t in range(L + 1))
            assert wl1_joint_indistinguishable(g, h, L) == same


def test_isomorphic_graphs_indistinguishable(rng):
    for _ in range(30):
        n = int(rng.integers(2, 8))
        g = random_graph(rng, n, d=2)
        perm = [int(x) for x in rng.permutation(n)]
        h = g.relabel(perm)
        assert brute_isomorphic(g, h)
        assert wl1_joint_indistinguishable(g, h) and mwl1_joint_indistinguishable(g, h)


def test_mean_joint_matches_textbook(rng):
    def mean_colors(graphs, t):
        colors = [[repr(x) for x in g.features] for g in graphs]
        for _ in range(t):
            nxt = []
            for c, g in zip(colors, graphs):
                adj = g.neighbors()
                row = []
                for v in range(g.n):
                    cnt = Counter(c[w] for w in adj[v])
                    freq = sorted((col, Fraction(k, len(adj[v]))) for col, k in cnt.items())
                    row.append(f"({c[v]}|{freq})")
                nxt.append(row)
            colors = nxt
        return colors

    for _ in range(100):
        n = int(rng.integers(2, 7))
        g, h = random_graph(rng, n, d=2), random_graph(rng, n, d=2)
        for L in range(4):
            same = all(Counter(a) == Counter(b) for a, b in (mean_colors([g, h], t) for t in range(L + 1)))
            assert mwl1_joint_indistinguishable(g, h, L) == same


def test_quotient_counts_four_vertex_graphs():
    from graphcover.families import FamilySpec, enumerate_family
    coll = enumerate_family(FamilySpec("all", 4))
    assert len(quotient_classes(coll)) == 11
    # Every pair across classes is distinguishable, every pair inside is not.
    classes = quotient_classes(coll, "wl", 2)
    for a, b in itertools.combinations(range(len(coll)), 2):
        same = any(a in c and b in c for c in classes)
        assert same == wl1_joint_indistinguishable(coll[a], coll[b], 2)


def test_stable_sentinel_repr():
    assert repr(STABLE) == "STABLE"
