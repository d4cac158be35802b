"""Labeled graphs: construction, single-element edits, padding and TU dataset I/O."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class GraphError(ValueError):
    pass


class EdgeAbsent(GraphError):
    pass


class EdgePresent(GraphError):
    pass


class BadVertex(GraphError):
    pass


class BadDimension(GraphError):
    pass


class TargetTooSmall(GraphError):
    pass


class FeatureDimMismatch(GraphError):
    pass


class DataError(GraphError):
    """Malformed or inconsistent dataset files."""


class MissingFile(DataError):
    pass


class MalformedLine(DataError):
    def __init__(self, path: str, line_no: int, text: str):
        super().__init__(f"{os.path.basename(path)}:{line_no}: cannot parse {text!r}")
        self.path = path
        self.line_no = line_no


class InconsistentIndicator(DataError):
    pass


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class LabeledGraph:
    """Undirected simple graph on vertices 0..n-1 with one feature vector per vertex.

    Features are stored as a tuple of float tuples so the value is hashable and
    immutable; ``feature_matrix`` gives the numpy view.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    features: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.n < 0:
            raise BadVertex("negative order")
        if len(self.features) != self.n:
            raise BadDimension(f"{len(self.features)} feature vectors for {self.n} vertices")
        if self.n:
            d = len(self.features[0])
            if d < 1 or any(len(x) != d for x in self.features):
                raise BadDimension("feature vectors must share one length >= 1")
        for u, v in self.edges:
            if not (0 <= u < v < self.n):
                raise BadVertex(f"edge {(u, v)} is not a normalized pair inside [0, {self.n})")

    @property
    def d(self) -> int:
        return len(self.features[0]) if self.n else 0

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def feature_matrix(self) -> np.ndarray:
        return np.array(self.features, dtype=float).reshape(self.n, self.d)

    def is_one_hot(self) -> bool:
        return all(sorted(x) == [0.0] * (len(x) - 1) + [1.0] for x in self.features)

    def relabel(self, perm: Sequence[int]) -> "LabeledGraph":
        """Vertex i of the result is vertex perm^-1(i) of self, i.e. self's vertex v moves to perm[v]."""
        feats: list[tuple[float, ...]] = [()] * self.n
        for v, p in enumerate(perm):
            feats[p] = self.features[v]
        return LabeledGraph(self.n, frozenset(_edge(perm[u], perm[v]) for u, v in self.edges), tuple(feats))


def make_graph(n: int, edges: Iterable[tuple[int, int]], features: Sequence[Sequence[float]] | None = None) -> LabeledGraph:
    """Build a graph; ``features=None`` gives every vertex the 1-dimensional feature [1]."""
    es = set()
    for u, v in edges:
        if u == v:
            raise BadVertex(f"self-loop at {u}")
        es.add(_edge(int(u), int(v)))
    if features is None:
        feats = tuple((1.0,) for _ in range(n))
    else:
        feats = tuple(tuple(float(c) for c in x) for x in features)
    return LabeledGraph(n, frozenset(es), feats)


def one_hot(labels: Sequence[int], d: int) -> list[list[float]]:
    out = []
    for lab in labels:
        if not 0 <= lab < d:
            raise BadDimension(f"label {lab} outside alphabet of size {d}")
        row = [0.0] * d
        row[lab] = 1.0
        out.append(row)
    return out


def path_graph(n: int) -> LabeledGraph:
    return make_graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> LabeledGraph:
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> LabeledGraph:
    return make_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(leaves: int) -> LabeledGraph:
    return make_graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def empty_graph(n: int) -> LabeledGraph:
    return make_graph(n, [])


def adjacency_matrix(g: LabeledGraph) -> np.ndarray:
    a = np.zeros((g.n, g.n), dtype=float)
    for u, v in g.edges:
        a[u, v] = a[v, u] = 1.0
    return a


def max_degree(g: LabeledGraph) -> int:
    return max(g.degrees(), default=0)


def disjoint_union(g: LabeledGraph, h: LabeledGraph) -> LabeledGraph:
    if g.n and h.n and g.d != h.d:
        raise FeatureDimMismatch(f"feature dimensions {g.d} and {h.d}")
    shifted = {(u + g.n, v + g.n) for u, v in h.edges}
    return LabeledGraph(g.n + h.n, g.edges | shifted, g.features + h.features)


class DeleteEdge(NamedTuple):
    u: int
    v: int


class AddEdge(NamedTuple):
    u: int
    v: int


class SetFeature(NamedTuple):
    vertex: int
    feature: tuple[float, ...]


EditOp = DeleteEdge | AddEdge | SetFeature


def edit(g: LabeledGraph, op: EditOp) -> LabeledGraph:
    """Return a new graph that differs from ``g`` only in the element named by ``op``."""
    if isinstance(op, SetFeature):
        if not 0 <= op.vertex < g.n:
            raise BadVertex(f"vertex {op.vertex} not in [0, {g.n})")
        x = tuple(float(c) for c in op.feature)
        if len(x) != g.d:
            raise BadDimension(f"feature of length {len(x)}, graph has d={g.d}")
        feats = list(g.features)
        feats[op.vertex] = x
        return LabeledGraph(g.n, g.edges, tuple(feats))
    for w in (op.u, op.v):
        if not 0 <= w < g.n:
            raise BadVertex(f"vertex {w} not in [0, {g.n})")
    if op.u == op.v:
        raise BadVertex("self-loops are not allowed")
    e = _edge(op.u, op.v)
    if isinstance(op, DeleteEdge):
        if e not in g.edges:
            raise EdgeAbsent(str(e))
        return LabeledGraph(g.n, g.edges - {e}, g.features)
    if e in g.edges:
        raise EdgePresent(str(e))
    return LabeledGraph(g.n, g.edges | {e}, g.features)


def pad_to_order(g: LabeledGraph, n_target: int) -> LabeledGraph:
    """Append isolated vertices carrying the all-zero feature until the order is ``n_target``."""
    if n_target < g.n:
        raise TargetTooSmall(f"cannot pad order {g.n} down to {n_target}")
    zero = tuple(0.0 for _ in range(g.d))
    return LabeledGraph(n_target, g.edges, g.features + (zero,) * (n_target - g.n))


def canonical_bytes(g: LabeledGraph) -> bytes:
    """Deterministic serialization of the graph value (not an isomorphism invariant)."""
    parts = [f"n={g.n};d={g.d}", "E=" + ",".join(f"{u}-{v}" for u, v in sorted(g.edges))]
    parts.append("X=" + "|".join(",".join(repr(c) for c in x) for x in g.features))
    return ";".join(parts).encode()


@dataclass
class GraphCollection:
    graphs: list[LabeledGraph]
    targets: list[int] = field(default_factory=list)
    sources: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.targets:
            self.targets = [0] * len(self.graphs)
        if not self.sources:
            self.sources = [str(i) for i in range(len(self.graphs))]
        if not (len(self.graphs) == len(self.targets) == len(self.sources)):
            raise GraphError("graphs, targets and sources must have equal length")
        dims = {g.d for g in self.graphs if g.n}
        if len(dims) > 1:
            raise FeatureDimMismatch(f"collection mixes feature dimensions {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, i: int) -> LabeledGraph:
        return self.graphs[i]

    @property
    def max_order(self) -> int:
        return max((g.n for g in self.graphs), default=0)

    def padded(self, n_target: int | None = None) -> "GraphCollection":
        n_target = self.max_order if n_target is None else n_target
        return GraphCollection([pad_to_order(g, n_target) for g in self.graphs], list(self.targets), list(self.sources))


def _read_ints(path: str, width: int | None) -> list[list[int]]:
    rows = []
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                row = [int(tok) for tok in text.replace(",", " ").split()]
            except ValueError:
                raise MalformedLine(path, line_no, text) from None
            if width is not None and len(row) != width:
                raise MalformedLine(path, line_no, text)
            rows.append(row)
    return rows


def ingest_tu_dataset(path: str, name: str) -> GraphCollection:
    """Read a TUDataset text directory (``NAME_A.txt`` and friends) into a collection.

    Node labels are one-hot encoded over the sorted set of observed values; a
    missing node-label file gives d=1 with every feature equal to [1]. Graph
    labels may take at most two distinct values, mapped in ascending order to 0/1.
    """
    def f(suffix: str) -> str:
        return os.path.join(path, f"{name}_{suffix}.txt")

    for suffix in ("A", "graph_indicator", "graph_labels"):
        if not os.path.isfile(f(suffix)):
            raise MissingFile(f(suffix))
    indicator = [r[0] for r in _read_ints(f("graph_indicator"), 1)]
    graph_labels = [r[0] for r in _read_ints(f("graph_labels"), 1)]
    edges = _read_ints(f("A"), 2)
    if os.path.isfile(f("node_labels")):
        node_labels = [r[0] for r in _read_ints(f("node_labels"), None)]
        if len(node_labels) != len(indicator):
            raise InconsistentIndicator(f"{len(node_labels)} node labels for {len(indicator)} vertices")
        alphabet = sorted(set(node_labels))
        index = {lab: i for i, lab in enumerate(alphabet)}
        feats = one_hot([index[lab] for lab in node_labels], len(alphabet))
    else:
        feats = [[1.0] for _ in indicator]

    n_graphs = len(graph_labels)
    if any(not 1 <= gid <= n_graphs for gid in indicator):
        raise InconsistentIndicator("graph indicator references a graph id without a label")
    if any(b < a for a, b in zip(indicator, indicator[1:])):
        raise InconsistentIndicator("graph indicator must be non-decreasing")
    members: list[list[int]] = [[] for _ in range(n_graphs)]
    for k, gid in enumerate(indicator):
        members[gid - 1].append(k)
    local = {}
    for gi, vs in enumerate(members):
        for i, k in enumerate(vs):
            local[k] = (gi, i)
    graph_edges: list[set[tuple[int, int]]] = [set() for _ in range(n_graphs)]
    for a, b in edges:
        if not (1 <= a <= len(indicator) and 1 <= b <= len(indicator)):
            raise InconsistentIndicator(f"edge ({a}, {b}) references an unknown vertex")
        ga, ia = local[a - 1]
        gb, ib = local[b - 1]
        if ga != gb:
            raise InconsistentIndicator(f"edge ({a}, {b}) joins graphs {ga + 1} and {gb + 1}")
        if ia != ib:
            graph_edges[ga].add(_edge(ia, ib))

    label_values = sorted(set(graph_labels))
    if len(label_values) > 2:
        raise DataError(f"expected at most two graph label values, found {label_values}")
    targets = [label_values.index(y) for y in graph_labels]
    graphs = [
        LabeledGraph(len(vs), frozenset(graph_edges[gi]), tuple(tuple(feats[k]) for k in vs))
        for gi, vs in enumerate(members)
    ]
    return GraphCollection(graphs, targets, [f"{name}:{gi + 1}" for gi in range(n_graphs)])


def write_tu_dataset(collection: GraphCollection, path: str, name: str) -> None:
    """Write one-hot (or single-feature) graphs back to TU text files.

    Features must be one-hot or the constant [1]; the node label is the hot index.
    """
    os.makedirs(path, exist_ok=True)
    a_lines, ind_lines, lab_lines = [], [], []
    offset = 0
    write_labels = any(g.d > 1 for g in collection.graphs)
    for gi, g in enumerate(collection.graphs):
        for u, v in sorted(g.edges):
            a_lines.append(f"{u + offset + 1}, {v + offset + 1}")
            a_lines.append(f"{v + offset + 1}, {u + offset + 1}")
        for x in g.features:
            ind_lines.append(str(gi + 1))
            hot = [i for i, c in enumerate(x) if c == 1.0]
            if len(hot) != 1 or sum(x) != 1.0:
                raise BadDimension("only one-hot features can be written in TU format")
            lab_lines.append(str(hot[0]))
        offset += g.n
    with open(os.path.join(path, f"{name}_A.txt"), "w") as fh:
        fh.write("\n".join(a_lines) + ("\n" if a_lines else ""))
    with open(os.path.join(path, f"{name}_graph_indicator.txt"), "w") as fh:
        fh.write("\n".join(ind_lines) + "\n")
    with open(os.path.join(path, f"{name}_graph_labels.txt"), "w") as fh:
        fh.write("\n".join(str(t) for t in collection.targets) + "\n")
    if write_labels:
        with open(os.path.join(path, f"{name}_node_labels.txt"), "w") as fh:
            fh.write("\n".join(lab_lines) + "\n")
