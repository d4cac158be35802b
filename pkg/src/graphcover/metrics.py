"""Graph pseudo-metrics: Forest distance, Tree Mover's distance, mean-Forest distance,
tree distances with permutation or doubly stochastic alignment, and the trivial WL metric."""
from __future__ import annotations

import csv
from collections import Counter
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graph_core import GraphCollection, LabeledGraph, SetFeature, adjacency_matrix, canonical_bytes, edit, make_graph, one_hot
from .solvers import LpProblem, assignment, assignment_cost, solve_lp
from .unrolling import PaddedForest, RootedTree, mean_unroll, unroll
from .wl import STABLE, wl1_joint_indistinguishable

Omega = Callable[[int], float]


class MetricError(ValueError):
    pass


class OrderMismatch(MetricError):
    pass


class DimMismatch(MetricError):
    pass


class TooLargeForExact(MetricError):
    pass


def _check_pair(g: LabeledGraph, h: LabeledGraph, min_order: int = 1) -> None:
    if g.n != h.n:
        raise OrderMismatch(f"orders {g.n} and {h.n} differ")
    if g.n < min_order:
        raise OrderMismatch(f"order {g.n} below minimum {min_order}")
    if g.d != h.d:
        raise DimMismatch(f"feature dimensions {g.d} and {h.d} differ")


def _ordered(g: LabeledGraph, h: LabeledGraph) -> tuple[LabeledGraph, LabeledGraph]:
    # Rounding depends on argument order; a fixed order makes every metric exactly symmetric.
    return (g, h) if canonical_bytes(g) <= canonical_bytes(h) else (h, g)


def _norm(x: Sequence[float]) -> float:
    return math.sqrt(sum(c * c for c in x))


def _dist(x: Sequence[float], y: Sequence[float]) -> float:
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(x, y)))


def _transport(rows: list, cols: list, slots: int, pair_cost, pad_cost, key=None) -> float:
    """Optimal matching of two child lists inside ``slots`` positions filled up with zero subtrees.

    Subtree costs form a pseudo-metric, so a subtree present on both sides can
    stay matched to its copy: shared items (equal under ``key``) are cancelled
    first. Zero subtrees beyond |rows| + |cols| can only meet each other at
    cost 0, so the matrix is cut to min(slots, |rows| + |cols|) without
    changing the optimum.
    """
    if rows and cols:
        spare = Counter(map(key, cols) if key else cols)
        kept = []
        for a in rows:
            k = key(a) if key else a
            if spare[k]:
                spare[k] -= 1
            else:
                kept.append(a)
        if len(kept) < len(rows):
            slots -= len(rows) - len(kept)
            left = []
            for b in cols:
                k = key(b) if key else b
                if spare[k]:
                    spare[k] -= 1
                    left.append(b)
            rows, cols = kept, left
    size = min(slots, len(rows) + len(cols))
    if size == 0:
        return 0.0
    pr, pc = size - len(rows), size - len(cols)
    if size == 1:
        return pair_cost(rows[0], cols[0]) if rows and cols else pad_cost(rows[0] if rows else cols[0])
    mat = []
    for a in rows:
        pa = pad_cost(a)
        mat.append([pair_cost(a, b) for b in cols] + [pa] * pc)
    pad_row = [pad_cost(b) for b in cols] + [0.0] * pc
    mat.extend([pad_row] * pr)
    if size <= 3:
        return min(sum(mat[i][p[i]] for i in range(size)) for p in itertools.permutations(range(size)))
    return assignment_cost(mat)


class ForestDistance:
    """Forest distance computed on unrolling types instead of materialized forests.

    The depth-r unrolling below a vertex is determined by its type, an interned
    (feature, sorted child types) key, so subtree-pair costs are memoized per
    type pair. One instance may be reused across many graph pairs of the same
    order; the memo tables then pay off across a whole distance matrix.
    """

    def __init__(self, n: int, omega: Omega | None = None):
        if n < 2:
            raise OrderMismatch("Forest distance needs order >= 2")
        self.n = n
        self.omega = omega
        self._types: dict = {}
        self._info: list[tuple[tuple[float, ...], tuple[int, ...]]] = []
        self._zero: dict[tuple[int, int], float] = {}
        self._pair: dict[tuple[int, int, int], float] = {}

    def _type(self, key, feature, kids) -> int:
        got = self._types.get(key)
        if got is None:
            got = self._types[key] = len(self._info)
            self._info.append((feature, kids))
        return got

    def types(self, g: LabeledGraph, depth: int) -> list[list[int]]:
        """types[r][u] is the type of u's depth-r unrolling."""
        adj = g.neighbors()
        cur = [self._type((0, x), x, ()) for x in g.features]
        out = [cur]
        for r in range(1, depth + 1):
            nxt = []
            for u in range(g.n):
                kids = tuple(sorted(cur[w] for w in adj[u]))
                nxt.append(self._type((r, g.features[u], kids), g.features[u], kids))
            cur = nxt
            out.append(cur)
        return out

    def _w(self, level: int) -> float:
        return 1.0 if self.omega is None else float(self.omega(level))

    def _next(self, level: int) -> int:
        # Unit weights make costs level-free; keep one memo entry per type pair.
        return 0 if self.omega is None else level + 1

    def zero_cost(self, t: int, level: int) -> float:
        """Cost of a type against the all-zero subtree with the same root level."""
        key = (t, level)
        got = self._zero.get(key)
        if got is None:
            x, kids = self._info[t]
            got = self._w(level) * _norm(x) + sum(self.zero_cost(k, self._next(level)) for k in kids)
            self._zero[key] = got
        return got

    def pair_cost(self, a: int, b: int, level: int) -> float:
        if a > b:
            a, b = b, a
        key = (a, b, level)
        got = self._pair.get(key)
        if got is None:
            xa, ka = self._info[a]
            xb, kb = self._info[b]
            got = self._w(level) * _dist(xa, xb)
            if ka or kb:
                got += _transport(
                    list(ka), list(kb), self.n - 1,
                    lambda s, t: self.pair_cost(s, t, self._next(level)),
                    lambda s: self.zero_cost(s, self._next(level)),
                )
            self._pair[key] = got
        return got

    def profile(self, g: LabeledGraph, h: LabeledGraph, depth: int) -> list[float]:
        """Distances for every depth 0..depth. Requires constant weights (omega unset)."""
        if self.omega is not None:
            raise MetricError("depth profiles are only defined for constant weights")
        _check_pair(g, h, 2)
        if g.n != self.n:
            raise OrderMismatch(f"instance built for order {self.n}, got {g.n}")
        g, h = _ordered(g, h)
        tg, th = self.types(g, depth), self.types(h, depth)
        return [assignment_cost([[self.pair_cost(a, b, 0) for b in th[r]] for a in tg[r]]) for r in range(depth + 1)]

    def __call__(self, g: LabeledGraph, h: LabeledGraph, L: int) -> float:
        _check_pair(g, h, 2)
        if g.n != self.n:
            raise OrderMismatch(f"instance built for order {self.n}, got {g.n}")
        g, h = _ordered(g, h)
        # Tree roots sit at level 0.
        tg, th = self.types(g, L)[L], self.types(h, L)[L]
        return assignment_cost([[self.pair_cost(a, b, 0) for b in th] for a in tg])


def forest_distance(g: LabeledGraph, h: LabeledGraph, L: int, omega: Omega | None = None) -> float:
    """Minimum total feature cost over edge-preserving bijections of the padded depth-L unrolling forests."""
    _check_pair(g, h, 2)
    return ForestDistance(g.n, omega)(g, h, L)


def forest_distance_profile(g: LabeledGraph, h: LabeledGraph, depth: int) -> list[float]:
    """[FD_0, ..., FD_depth] with unit weights, sharing all subtree costs."""
    _check_pair(g, h, 2)
    return ForestDistance(g.n).profile(g, h, depth)


def forest_transport(fa: PaddedForest, fb: PaddedForest) -> float:
    """Forest distance evaluated directly on two materialized padded forests (unit weights)."""
    if fa.n != fb.n or fa.depth != fb.depth:
        raise OrderMismatch("forests differ in order or depth")
    memo: dict[tuple[bytes, bytes], float] = {}

    def cost(a: RootedTree, b: RootedTree) -> float:
        key = (a.code, b.code)
        got = memo.get(key)
        if got is None:
            got = _dist(a.label, b.label)
            if a.children:
                got += assignment([[cost(x, y) for y in b.children] for x in a.children])[1]
            memo[key] = got
        return got

    return assignment([[cost(a, b) for b in fb.trees] for a in fa.trees])[1]


def tmd(g: LabeledGraph, h: LabeledGraph, L: int, omega: Omega | None = None) -> float:
    """Tree Mover's distance between the multisets of depth-L unrolling trees.

    Tree distance: root feature distance, plus omega(depth) times the optimal
    transport between child multisets, the smaller one filled up with blank trees
    (a single zero-feature vertex). Depth here counts levels, so a lone vertex
    has depth 1 and only trees with children recurse.
    """
    _check_pair(g, h)
    d = g.d
    blank = RootedTree((0.0,) * d, ())
    memo: dict[tuple[bytes, bytes], float] = {}

    def w(depth: int) -> float:
        return 1.0 if omega is None else float(omega(depth))

    def ot(xs: Sequence[RootedTree], ys: Sequence[RootedTree]) -> float:
        k = max(len(xs), len(ys))
        xs = list(xs) + [blank] * (k - len(xs))
        ys = list(ys) + [blank] * (k - len(ys))
        return assignment([[td(a, b) for b in ys] for a in xs])[1] if k else 0.0

    def td(a: RootedTree, b: RootedTree) -> float:
        key = (a.code, b.code)
        got = memo.get(key)
        if got is None:
            depth = max(a.depth, b.depth) + 1
            got = _dist(a.label, b.label)
            if depth > 1:
                got += w(depth) * ot(a.children, b.children)
            memo[key] = got
        return got

    return ot([unroll(g, u, L) for u in range(g.n)], [unroll(h, v, L) for v in range(h.n)])


def _scaled(t: RootedTree, scale: int = 1) -> RootedTree:
    kids = tuple(_scaled(c, scale * len(t.children)) for c in t.children)
    return RootedTree(tuple(c / scale for c in t.label), kids, scale)


class MeanForestDistance:
    """mean-Forest distance on scaled mean-pruned unrollings, with padding left implicit.

    A missing child slot holds an all-zero subtree, whose cost against a real
    subtree is that subtree's total feature norm.
    """

    def __init__(self, n: int):
        if n < 2:
            raise OrderMismatch("mean-Forest distance needs order >= 2")
        self.n = n
        self._pair: dict[tuple[bytes, bytes], float] = {}
        self._zero: dict[bytes, float] = {}

    def zero_cost(self, t: RootedTree) -> float:
        got = self._zero.get(t.code)
        if got is None:
            got = self._zero[t.code] = _norm(t.label) + sum(self.zero_cost(c) for c in t.children)
        return got

    def pair_cost(self, a: RootedTree, b: RootedTree) -> float:
        key = (a.code, b.code) if a.code <= b.code else (b.code, a.code)
        got = self._pair.get(key)
        if got is None:
            got = _dist(a.label, b.label)
            if a.children or b.children:
                got += _transport(list(a.children), list(b.children), self.n - 1, self.pair_cost, self.zero_cost,
                                  key=lambda t: t.code)
            self._pair[key] = got
        return got

    def trees(self, g: LabeledGraph, L: int) -> list[RootedTree]:
        return [_scaled(mean_unroll(g, u, L)) for u in range(g.n)]

    def __call__(self, g: LabeledGraph, h: LabeledGraph, L: int) -> float:
        _check_pair(g, h, 2)
        g, h = _ordered(g, h)
        tg, th = self.trees(g, L), self.trees(h, L)
        return assignment_cost([[self.pair_cost(a, b) for b in th] for a in tg])


def mean_forest_distance(g: LabeledGraph, h: LabeledGraph, L: int) -> float:
    _check_pair(g, h, 2)
    return MeanForestDistance(g.n)(g, h, L)


def label_cost_matrix(g: LabeledGraph, h: LabeledGraph) -> np.ndarray:
    """L(G,H)[i, j] = Euclidean distance between feature i of g and feature j of h."""
    xg, xh = g.feature_matrix(), h.feature_matrix()
    return np.sqrt(((xg[:, None, :] - xh[None, :, :]) ** 2).sum(axis=2))


def delta_perm_1(g: LabeledGraph, h: LabeledGraph, max_order: int = 10) -> float:
    """min over permutations of ||A(G)P - P A(H)||_1 (entrywise) + tr(P^T L(G,H)), by branch and bound."""
    _check_pair(g, h)
    n = g.n
    if n > max_order:
        raise TooLargeForExact(f"order {n} exceeds exact-search limit {max_order}")
    if n == 0:
        return 0.0
    g, h = _ordered(g, h)
    a, b = adjacency_matrix(g).astype(int).tolist(), adjacency_matrix(h).astype(int).tolist()
    lab = label_cost_matrix(g, h).tolist()
    # Cheapest label cost per remaining G-vertex gives an admissible bound.
    row_min = [min(r) for r in lab]
    order = sorted(range(n), key=lambda v: -sum(a[v]))
    # Start from the label-optimal assignment as incumbent.
    perm0, _ = assignment(lab)
    best = [_perm_cost(a, b, lab, perm0)]
    pi = [-1] * n
    used = [False] * n

    def search(depth: int, cost: float, tail_bound: float) -> None:
        if cost + tail_bound >= best[0] - 1e-12:
            return
        if depth == n:
            best[0] = cost
            return
        v = order[depth]
        rest = tail_bound - row_min[v]
        for w in range(n):
            if used[w]:
                continue
            inc = lab[v][w]
            for k in range(depth):
                u = order[k]
                if a[v][u] != b[w][pi[u]]:
                    inc += 2.0
            pi[v] = w
            used[w] = True
            search(depth + 1, cost + inc, rest)
            used[w] = False
        pi[v] = -1

    search(0, 0.0, sum(row_min))
    return best[0]


def _perm_cost(a, b, lab, perm) -> float:
    n = len(perm)
    adj = sum(abs(a[i][k] - b[perm[i]][perm[k]]) for i in range(n) for k in range(n))
    return adj + sum(lab[i][perm[i]] for i in range(n))


def ds1_problem(g: LabeledGraph, h: LabeledGraph) -> LpProblem:
    """LP over doubly stochastic S with A(G)S - S A(H) = P - N, P, N >= 0.

    Variables: S, P, N (each n*n, row-major). Objective: sum P + sum N + <L(G,H), S>.
    At an optimum P + N is the entrywise absolute value.
    """
    n = g.n
    a, b = adjacency_matrix(g), adjacency_matrix(h)
    nn = n * n
    # M vec(S) = vec(A S - S B) in row-major order.
    m = np.kron(a, np.eye(n)) - np.kron(np.eye(n), b.T)
    c = np.concatenate([label_cost_matrix(g, h).ravel(), np.ones(2 * nn)])
    eye = np.eye(nn)
    a_eq = np.zeros((nn + 2 * n, 3 * nn))
    a_eq[:nn] = np.hstack([m, -eye, eye])
    for i in range(n):
        a_eq[nn + i, i * n:(i + 1) * n] = 1.0
        a_eq[nn + n + i, i:nn:n] = 1.0
    b_eq = np.concatenate([np.zeros(nn), np.ones(2 * n)])
    return LpProblem(c, a_eq, b_eq)


def delta_ds_1(g: LabeledGraph, h: LabeledGraph, max_order: int = 32) -> float:
    """min over doubly stochastic S of ||A(G)S - S A(H)||_1 (entrywise) + tr(S^T L(G,H))."""
    _check_pair(g, h)
    if g.n > max_order:
        raise TooLargeForExact(f"order {g.n} exceeds LP size limit {max_order}")
    if g.n == 0:
        return 0.0
    return max(solve_lp(ds1_problem(*_ordered(g, h))).value, 0.0)


def _bounded_degree_graph(rng: np.random.Generator, n: int, d: int, q: int) -> LabeledGraph:
    deg = [0] * n
    edges = []
    pairs = list(itertools.combinations(range(n), 2))
    for k in rng.permutation(len(pairs)):
        u, v = pairs[k]
        if deg[u] < q and deg[v] < q and rng.random() < 0.6:
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
    return make_graph(n, edges, one_hot([int(x) for x in rng.integers(0, d, n)], d))


def mean_edit_radius(d: int, q: int, L: int, orders: Sequence[int] = range(2, 9), samples: int = 50,
                     seed: int = 0) -> float:
    """Largest mean-forest distance seen between a degree-<=q graph and a copy with one vertex feature replaced.

    No closed form is known for this constant, so it is measured over ``samples``
    random one-hot graphs per order. The result is a lower estimate of the
    supremum, reproducible for a fixed seed.
    """
    if d < 2:
        raise ValueError("a feature change needs an alphabet of at least 2 labels")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in orders:
        mfd = MeanForestDistance(n)
        for _ in range(samples):
            g = _bounded_degree_graph(rng, n, d, q)
            v = int(rng.integers(0, n))
            new = (g.features[v].index(1.0) + int(rng.integers(1, d))) % d
            worst = max(worst, mfd(g, edit(g, SetFeature(v, tuple(one_hot([new], d)[0]))), L))
    return worst


def wl_trivial_metric(g: LabeledGraph, h: LabeledGraph, L=STABLE) -> int:
    return 0 if wl1_joint_indistinguishable(g, h, L) else 1


METRIC_KINDS = ("fd", "tmd", "mean-fd", "delta-perm1", "delta-ds1", "wl")


@dataclass(frozen=True)
class MetricSpec:
    kind: str
    L: int | None = None
    omega: Omega | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise MetricError(f"unknown metric {self.kind!r}; choose from {METRIC_KINDS}")
        if self.kind in ("fd", "tmd", "mean-fd") and (self.L is None or self.L < 0):
            raise MetricError(f"metric {self.kind} needs a depth L >= 0")

    def describe(self) -> dict:
        return {"kind": self.kind, "L": self.L, "omega": "constant-1" if self.omega is None else "custom"}


def _pair_function(spec: MetricSpec, n: int):
    if spec.kind == "fd":
        fd = ForestDistance(n, spec.omega)
        return lambda g, h: fd(g, h, spec.L)
    if spec.kind == "mean-fd":
        mfd = MeanForestDistance(n)
        return lambda g, h: mfd(g, h, spec.L)
    if spec.kind == "tmd":
        return lambda g, h: tmd(g, h, spec.L, spec.omega)
    if spec.kind == "delta-perm1":
        return delta_perm_1
    if spec.kind == "delta-ds1":
        return delta_ds_1
    return lambda g, h: float(wl_trivial_metric(g, h, STABLE if spec.L is None else spec.L))


class PairFailure(RuntimeError):
    """A pairwise computation failed; ``cause`` survives the trip back from a worker process."""

    def __init__(self, i: int, j: int, cause: Exception):
        super().__init__(f"pair ({i}, {j}) failed: {cause}")
        self.pair = (i, j)
        self.cause = cause

    def __reduce__(self):
        return PairFailure, (*self.pair, self.cause)


def _rows_worker(args) -> list[tuple[int, int, float]]:
    graphs, spec, rows = args
    fn = _pair_function(spec, graphs[0].n)
    out = []
    for i in rows:
        for j in range(i + 1, len(graphs)):
            try:
                out.append((i, j, float(fn(graphs[i], graphs[j]))))
            except Exception as exc:  # re-raised with the pair index attached
                raise PairFailure(i, j, exc) from exc
    return out


@dataclass
class DistanceMatrix:
    values: np.ndarray
    spec: MetricSpec
    sources: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.values:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"spec": self.spec.describe(), "sources": self.sources,
                           "values": [[float(x) for x in r] for r in self.values]}, indent=1)


def distance_matrix(collection: GraphCollection | Sequence[LabeledGraph], spec: MetricSpec, threads: int = 1) -> DistanceMatrix:
    """All pairwise distances; rows are split across processes and merged by index."""
    graphs = collection.graphs if isinstance(collection, GraphCollection) else list(collection)
    sources = collection.sources if isinstance(collection, GraphCollection) else [str(i) for i in range(len(graphs))]
    m = len(graphs)
    if m and len({g.n for g in graphs}) > 1:
        raise OrderMismatch("collection is not padded to a common order")
    values = np.zeros((m, m))
    if m < 2:
        return DistanceMatrix(values, spec, list(sources))
    if threads <= 1 or spec.omega is not None:
        results = _rows_worker((graphs, spec, range(m)))
    else:
        chunks = [list(range(i, m, threads)) for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(itertools.chain.from_iterable(pool.map(_rows_worker, [(graphs, spec, c) for c in chunks])))
    for i, j, v in results:
        values[i, j] = values[j, i] = v
    return DistanceMatrix(values, spec, list(sources))
