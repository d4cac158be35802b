import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphcover.graph_core import (
    AddEdge, DeleteEdge, EdgeAbsent, EdgePresent, BadDimension, BadVertex, DataError, FeatureDimMismatch,
    GraphCollection, InconsistentIndicator, MalformedLine, MissingFile, SetFeature, TargetTooSmall,
    adjacency_matrix, canonical_bytes, complete_graph, cycle_graph, disjoint_union, edit, empty_graph,
    ingest_tu_dataset, make_graph, max_degree, one_hot, pad_to_order, path_graph, star_graph, write_tu_dataset,
)


@st.composite
def graphs(draw, max_n=7, max_d=3):
    n = draw(st.integers(1, max_n))
    d = draw(st.integers(1, max_d))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    labels = draw(st.lists(st.integers(0, d - 1), min_size=n, max_size=n))
    return make_graph(n, [p for p, keep in zip(pairs, mask) if keep], one_hot(labels, d) if d > 1 else None)


def test_adjacency_examples():
    assert not adjacency_matrix(empty_graph(3)).any()
    k3 = adjacency_matrix(complete_graph(3))
    assert (k3 == 1 - np.eye(3)).all()
    p3 = adjacency_matrix(path_graph(3))
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[1, 0] = expected[1, 2] = expected[2, 1] = 1
    assert (p3 == expected).all()


@given(graphs())
def test_adjacency_symmetric_zero_trace(g):
    a = adjacency_matrix(g)
    assert (a == a.T).all() and np.trace(a) == 0


def test_edit_examples():
    assert edit(complete_graph(3), DeleteEdge(0, 2)) == path_graph(3)
    assert edit(path_graph(3), AddEdge(0, 2)) == complete_graph(3)
    g = make_graph(3, [(0, 1)], one_hot([0, 0, 1], 2))
    h = edit(g, SetFeature(1, (0, 1)))
    assert [i for i in range(3) if g.features[i] != h.features[i]] == [1]


def test_edit_errors():
    g = path_graph(3)
    with pytest.raises(EdgeAbsent):
        edit(g, DeleteEdge(0, 2))
    with pytest.raises(EdgePresent):
        edit(g, AddEdge(1, 0))
    with pytest.raises(BadVertex):
        edit(g, SetFeature(5, (1,)))
    with pytest.raises(BadDimension):
        edit(g, SetFeature(0, (1, 0)))
    with pytest.raises(BadVertex):
        edit(g, AddEdge(1, 1))


@given(graphs(), st.data())
def test_edit_then_inverse_is_identity(g, data):
    if g.n < 2:
        return
    u, v = sorted(data.draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=2, unique=True)))
    if (u, v) in g.edges:
        assert edit(edit(g, DeleteEdge(u, v)), AddEdge(u, v)) == g
    else:
        assert edit(edit(g, AddEdge(u, v)), DeleteEdge(u, v)) == g
    w = data.draw(st.integers(0, g.n - 1))
    changed = edit(g, SetFeature(w, tuple(1.0 - c for c in g.features[w])))
    assert edit(changed, SetFeature(w, g.features[w])) == g


def test_padding():
    assert pad_to_order(path_graph(3), 3) == path_graph(3)
    p = pad_to_order(complete_graph(3), 5)
    assert p.n == 5 and p.edges == complete_graph(3).edges
    assert p.features[3:] == ((0.0,), (0.0,))
    with pytest.raises(TargetTooSmall):
        pad_to_order(complete_graph(3), 2)


@given(graphs(), st.integers(0, 4))
def test_padding_preserves_edges_and_features(g, extra):
    p = pad_to_order(g, g.n + extra)
    assert p.edges == g.edges and p.features[:g.n] == g.features
    assert all(not any(x) for x in p.features[g.n:])


def test_degree_and_union():
    assert max_degree(complete_graph(3)) == 2
    assert max_degree(star_graph(4)) == 4
    u = disjoint_union(complete_graph(3), complete_graph(3))
    assert u.n == 6 and u.degrees() == [2] * 6 and (3, 4) in u.edges
    with pytest.raises(FeatureDimMismatch):
        disjoint_union(complete_graph(3), make_graph(2, [], one_hot([0, 1], 2)))


def test_graph_invariants_rejected():
    with pytest.raises(BadVertex):
        make_graph(3, [(0, 3)])
    with pytest.raises(BadDimension):
        make_graph(2, [], [[1.0], [1.0, 0.0]])


def _write(path, name, files):
    os.makedirs(path, exist_ok=True)
    for suffix, text in files.items():
        with open(os.path.join(path, f"{name}_{suffix}.txt"), "w") as fh:
            fh.write(text)


def test_ingest_toy_triangle(tmp_path):
    _write(tmp_path, "T", {"A": "1, 2\n2, 3\n3, 1\n", "graph_indicator": "1\n1\n1\n",
                           "graph_labels": "0\n", "node_labels": "0\n0\n0\n"})
    coll = ingest_tu_dataset(str(tmp_path), "T")
    assert len(coll) == 1 and coll[0] == complete_graph(3) and coll[0].d == 1


def test_ingest_errors(tmp_path):
    base = {"A": "1, 2\n", "graph_indicator": "1\n1\n2\n", "graph_labels": "1\n-1\n"}
    _write(tmp_path / "ok", "D", base)
    assert len(ingest_tu_dataset(str(tmp_path / "ok"), "D")) == 2
    with pytest.raises(MissingFile):
        ingest_tu_dataset(str(tmp_path / "nowhere"), "D")
    _write(tmp_path / "cross", "D", dict(base, A="1, 3\n"))
    with pytest.raises(InconsistentIndicator):
        ingest_tu_dataset(str(tmp_path / "cross"), "D")
    _write(tmp_path / "bad", "D", dict(base, A="1, 2\nx, y\n"))
    with pytest.raises(MalformedLine) as info:
        ingest_tu_dataset(str(tmp_path / "bad"), "D")
    assert "2" in str(info.value)
    _write(tmp_path / "three", "D", dict(base, graph_indicator="1\n2\n3\n", graph_labels="0\n1\n2\n"))
    with pytest.raises(DataError):
        ingest_tu_dataset(str(tmp_path / "three"), "D")


def test_ingest_roundtrip_and_determinism(tmp_path, rng):
    from conftest import random_graph
    gs = [random_graph(rng, int(rng.integers(2, 8)), d=3) for _ in range(12)]
    coll = GraphCollection(gs, [i % 2 for i in range(12)])
    write_tu_dataset(coll, str(tmp_path), "R")
    a = ingest_tu_dataset(str(tmp_path), "R")
    b = ingest_tu_dataset(str(tmp_path), "R")
    assert [canonical_bytes(g) for g in a.graphs] == [canonical_bytes(g) for g in b.graphs]
    # Ingestion re-encodes over the labels actually present.
    alphabet = sorted({x.index(1.0) for g in gs for x in g.features})
    for g, h in zip(gs, a.graphs):
        assert g.edges == h.edges and h.d == len(alphabet)
        assert [alphabet.index(x.index(1.0)) for x in g.features] == [x.index(1.0) for x in h.features]
    assert a.targets == coll.targets


def test_collection_padding_and_dimension_check():
    coll = GraphCollection([path_graph(2), cycle_graph(4)])
    assert {g.n for g in coll.padded().graphs} == {4}
    with pytest.raises(FeatureDimMismatch):
        GraphCollection([path_graph(2), make_graph(2, [], one_hot([0, 1], 2))])
