import itertools
import math

import pytest

from graphcover.families import (
    FamilySpec, TooLarge, cover_tree, enumerate_family, forest_code, integer_partitions, merge_cover,
    otter_growth_ratios, partition_path_family, wedderburn_etherington,
)
from graphcover.graph_core import make_graph, path_graph, star_graph


def brute_classes(n, d=1, q=None):
    """Isomorphism classes by minimising an explicit (edges, labels) form over all vertex permutations."""
    pairs = list(itertools.combinations(range(n), 2))
    perms = list(itertools.permutations(range(n)))
    seen = set()
    for mask in range(1 << len(pairs)):
        edges = [p for i, p in enumerate(pairs) if mask >> i & 1]
        deg = [sum(v in e for e in edges) for v in range(n)]
        if q is not None and max(deg, default=0) > q:
            continue
        for labels in itertools.product(range(d), repeat=n):
            forms = []
            for p in perms:
                es = tuple(sorted(tuple(sorted((p[u], p[v]))) for u, v in edges))
                lab = [0] * n
                for v in range(n):
                    lab[p[v]] = labels[v]
                forms.append((es, tuple(lab)))
            seen.add(min(forms))
    return len(seen)


def test_all_graph_counts():
    counts = [len(enumerate_family(FamilySpec("all", n))) for n in range(1, 8)]
    assert counts == [1, 2, 4, 11, 34, 156, 1044]
    assert len(enumerate_family(FamilySpec("all-up-to", 4))) == 1 + 2 + 4 + 11


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_all_graphs_match_brute_force(n):
    assert len(enumerate_family(FamilySpec("all", n))) == brute_classes(n)


@pytest.mark.parametrize("n,d,q", [(3, 2, 1), (3, 2, 2), (4, 2, 2), (4, 3, 1)])
def test_labeled_graphs_match_brute_force(n, d, q):
    coll = enumerate_family(FamilySpec("labeled", n, d, q))
    assert len(coll) == brute_classes(n, d, q)
    assert all(max(g.degrees(), default=0) <= q and g.d == d for g in coll.graphs)


def test_family_too_large():
    with pytest.raises(TooLarge):
        enumerate_family(FamilySpec("all", 8))
    with pytest.raises(TooLarge):
        enumerate_family(FamilySpec("labeled", 8, 2, 2))
    with pytest.raises(TooLarge):
        partition_path_family(15)


def test_family_spec_parse():
    assert FamilySpec.parse("all:5") == FamilySpec("all", 5)
    assert FamilySpec.parse("labeled:4,2,3") == FamilySpec("labeled", 4, 2, 3)
    assert FamilySpec.parse("labeled:4,2,3").describe() == "labeled:4,2,3"
    for bad in ["all", "all:x", "labeled:4,2", "otter:4", "cubes:3", "all:0"]:
        with pytest.raises(ValueError):
            FamilySpec.parse(bad)


def test_wedderburn_etherington_values():
    assert [wedderburn_etherington(j) for j in range(1, 11)] == [1, 1, 2, 3, 6, 11, 23, 46, 98, 207]
    with pytest.raises(ValueError):
        wedderburn_etherington(0)


def test_otter_enumeration_matches_recurrence():
    for j in range(1, 11):
        trees = enumerate_family(FamilySpec("otter", 2 * j + 1))
        assert len(trees) == wedderburn_etherington(j)
        codes = {forest_code(g) for g in trees.graphs}
        assert len(codes) == len(trees)
        for g in trees.graphs:
            degs = g.degrees()
            assert len(g.edges) == g.n - 1 and sorted(set(degs)) <= [1, 2, 3] and degs.count(2) == 1


def test_otter_growth_ratio_settles():
    r = otter_growth_ratios(40)
    assert abs(r[-1] - r[-2]) < abs(r[9] - r[8])


def test_integer_partitions():
    assert integer_partitions(4) == [[4], [3, 1], [2, 2], [2, 1, 1], [1, 1, 1, 1]]
    assert [len(integer_partitions(n)) for n in range(1, 11)] == [1, 2, 3, 5, 7, 11, 15, 22, 30, 42]


def test_forest_code():
    assert forest_code(path_graph(4)) == forest_code(path_graph(4).relabel([2, 0, 3, 1]))
    assert forest_code(path_graph(4)) != forest_code(star_graph(3))
    with pytest.raises(ValueError):
        forest_code(make_graph(3, [(0, 1), (1, 2), (0, 2)]))


@pytest.mark.parametrize("n", [4, 5, 6, 8])
def test_partition_path_family(n):
    coll, groups = partition_path_family(n)
    assert len(groups) == len(integer_partitions(n))
    for group in groups:
        assert len(group) == math.ceil(n / 2)
        assert len({forest_code(coll[i]) for i in group}) == len(group)
    assert all(g.n == 2 * n and len(g.edges) == 2 * n - len(p) for g, p in zip(
        coll.graphs, (p for p in integer_partitions(n) for _ in range(math.ceil(n / 2)))))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_cover_tree_spans_classes(n):
    tree = cover_tree(FamilySpec("all", n))
    assert sorted(tree.order) == list(range(len(tree.classes)))
    assert tree.parent[tree.root] == -1
    # One edge deletion separates a parent and child representative.
    for c in tree.order:
        if c != tree.root:
            parent_edges = {len(tree.collection[i].edges) for i in tree.classes[tree.parent[c]]}
            child_edges = {len(tree.collection[i].edges) for i in tree.classes[c]}
            assert any(p - 1 in child_edges for p in parent_edges)


def test_labeled_cover_tree():
    tree = cover_tree(FamilySpec("labeled", 3, 2, 2))
    assert len(tree.order) == len(tree.classes)
    assert not tree.representative(tree.root).edges


def test_merge_cover_counts():
    assert [len(merge_cover(cover_tree(FamilySpec("all", 4)), k)) for k in (1, 2)] == [5, 3]
    assert [len(merge_cover(cover_tree(FamilySpec("all", 5)), k)) for k in (1, 2)] == [16, 8]
    with pytest.raises(ValueError):
        merge_cover(cover_tree(FamilySpec("all", 3)), 0)


@pytest.mark.parametrize("n,k", [(3, 1), (4, 1), (4, 2), (5, 1), (5, 2), (5, 3)])
def test_merge_cover_invariants(n, k):
    tree = cover_tree(FamilySpec("all", n))
    groups = merge_cover(tree, k)
    assert sorted(c for g in groups for c in g) == list(range(len(tree.classes)))
    assert len(groups) <= math.ceil(len(tree.classes) / (k + 1))
    for g in groups:
        assert all(tree.path_length(a, b) <= 2 * k for a, b in itertools.combinations(g, 2))
