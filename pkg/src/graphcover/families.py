"""Graph families enumerated up to isomorphism, and the edit trees used to cover them."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graph_core import GraphCollection, LabeledGraph, make_graph, one_hot
from .unrolling import RootedTree
from .wl import STABLE, quotient_classes

# Desk-scale caps.
MAX_ALL_GRAPHS = 7
MAX_OTTER_ORDER = 21
MAX_PARTITION_PATHS = 14
MAX_LABELED_STATES = 1 << 22

FAMILY_KINDS = ("all", "all-up-to", "otter", "partition-paths", "labeled")


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    """``kind`` is one of FAMILY_KINDS. ``d`` and ``q`` only matter for "labeled"."""

    kind: str
    n: int
    d: int = 1
    q: int | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family {self.kind!r}; expected one of {FAMILY_KINDS}")
        if self.n < 1:
            raise ValueError("order must be positive")
        if self.kind == "otter" and (self.n < 3 or self.n % 2 == 0):
            raise ValueError("Otter trees need odd order >= 3")
        if self.kind == "labeled" and (self.d < 1 or self.q is None or self.q < 0):
            raise ValueError("labeled family needs d >= 1 and q >= 0")

    @classmethod
    def parse(cls, text: str) -> "FamilySpec":
        """Parse ``kind:n`` or ``labeled:n,d,q``."""
        kind, _, params = text.partition(":")
        try:
            nums = [int(p) for p in params.split(",") if p.strip()]
        except ValueError as exc:
            raise ValueError(f"bad family parameters in {text!r}") from exc
        if kind == "labeled":
            if len(nums) != 3:
                raise ValueError("labeled family takes n,d,q")
            return cls(kind, nums[0], nums[1], nums[2])
        if len(nums) != 1:
            raise ValueError(f"family {kind!r} takes a single order")
        return cls(kind, nums[0])

    def describe(self) -> str:
        return f"labeled:{self.n},{self.d},{self.q}" if self.kind == "labeled" else f"{self.kind}:{self.n}"


# ---------------------------------------------------------------------------
# Brute-force orbit enumeration.
#
# A state packs an edge mask and the vertex labels into one integer:
# mask + code << E, with code the base-d number of the labels. Scanning states
# in increasing order, the first state not yet seen is the minimum of its
# orbit under vertex permutations, so it is a canonical representative.


class _StateSpace:
    def __init__(self, n: int, d: int = 1, q: int | None = None):
        self.n, self.d, self.q = n, d, q
        self.pairs = list(itertools.combinations(range(n), 2))
        self.E = len(self.pairs)
        self.size = (1 << self.E) * d**n
        if self.size > MAX_LABELED_STATES:
            raise TooLarge(f"{self.size} labeled states exceed the cap {MAX_LABELED_STATES}")
        index = {p: i for i, p in enumerate(self.pairs)}
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
        self.perms = perms
        # Edge i maps to edge emap[p, i] under permutation p.
        self.emap = np.array(
            [[index[tuple(sorted((p[u], p[v])))] for u, v in self.pairs] for p in perms], dtype=np.int64
        ).reshape(len(perms), self.E)
        self.powers = (d ** perms).astype(np.int64)
        self.canon = np.full(self.size, -1, dtype=np.int32)
        self.reps: list[int] = []

    def decode(self, s: int) -> tuple[list[tuple[int, int]], list[int]]:
        mask, code = s & ((1 << self.E) - 1), s >> self.E
        edges = [self.pairs[i] for i in range(self.E) if mask >> i & 1]
        labels = []
        for _ in range(self.n):
            code, r = divmod(code, self.d)
            labels.append(r)
        return edges, labels

    def encode(self, edges, labels) -> int:
        mask = 0
        for u, v in edges:
            mask |= 1 << self.pairs.index((min(u, v), max(u, v)))
        code = sum(lab * self.d**v for v, lab in enumerate(labels))
        return mask | code << self.E

    def orbit(self, s: int) -> np.ndarray:
        edges, labels = self.decode(s)
        idx = [self.pairs.index(e) for e in edges]
        masks = (np.left_shift(1, self.emap[:, idx])).sum(axis=1) if idx else np.zeros(len(self.perms), np.int64)
        codes = self.powers @ np.array(labels, dtype=np.int64)
        return masks + (codes << self.E)

    def admissible(self) -> np.ndarray:
        ok = np.ones(self.size, dtype=bool)
        if self.q is None:
            return ok
        masks = np.arange(1 << self.E, dtype=np.int64)
        deg = np.zeros((self.n, masks.size), dtype=np.int64)
        for i, (u, v) in enumerate(self.pairs):
            bit = (masks >> i) & 1
            deg[u] += bit
            deg[v] += bit
        good = (deg <= self.q).all(axis=0)
        return np.tile(good, self.d**self.n)

    def enumerate(self) -> list[int]:
        seen = ~self.admissible()
        pos = 0
        while True:
            free = np.flatnonzero(~seen[pos:])
            if free.size == 0:
                break
            s = pos + int(free[0])
            orbit = self.orbit(s)
            seen[orbit] = True
            self.canon[orbit] = len(self.reps)
            self.reps.append(s)
            pos = s + 1
        return self.reps

    def graph(self, s: int) -> LabeledGraph:
        edges, labels = self.decode(s)
        feats = one_hot(labels, self.d) if self.d > 1 else None
        return make_graph(self.n, edges, feats)


def _enumerate_space(n: int, d: int = 1, q: int | None = None) -> tuple[_StateSpace, GraphCollection]:
    space = _StateSpace(n, d, q)
    reps = space.enumerate()
    return space, GraphCollection([space.graph(s) for s in reps], sources=[f"n{n}#{i}" for i in range(len(reps))])


def _check_all(n: int) -> None:
    if n > MAX_ALL_GRAPHS:
        raise TooLarge(f"exhaustive enumeration is capped at n = {MAX_ALL_GRAPHS}")


# ---------------------------------------------------------------------------
# Trees and forests.


def integer_partitions(n: int) -> list[list[int]]:
    """All partitions of n, each in descending order; the list is in reverse lexicographic order."""
    if n < 1:
        raise ValueError("n must be positive")
    out: list[list[int]] = []

    def go(rest: int, cap: int, acc: list[int]) -> None:
        if rest == 0:
            out.append(list(acc))
            return
        for part in range(min(rest, cap), 0, -1):
            acc.append(part)
            go(rest - part, part, acc)
            acc.pop()

    go(n, n, [])
    return out


def _leaf_counts(m: int) -> list[int]:
    """Unordered full binary trees by number of leaves, index 0..m (index 0 unused)."""
    a = [0, 1] + [0] * max(0, m - 1)
    for k in range(2, m + 1):
        total = sum(a[i] * a[k - i] for i in range(1, (k + 1) // 2))
        if k % 2 == 0:
            h = a[k // 2]
            total += h * (h + 1) // 2
        a[k] = total
    return a


def wedderburn_etherington(j: int) -> int:
    """Number of unordered full binary trees with j internal vertices (2j+1 vertices in all)."""
    if j < 1:
        raise ValueError("j must be positive")
    return _leaf_counts(j + 1)[j + 1]


def otter_growth_ratios(j_max: int, b: float = 2.4832) -> list[float]:
    """w_j / (j^{-3/2} b^j) for j = 1..j_max; tends to a constant as j grows."""
    return [wedderburn_etherington(j) / (j**-1.5 * b**j) for j in range(1, j_max + 1)]


def _otter_shapes(internal: int) -> list[tuple]:
    # Shapes as nested tuples: () is a leaf, a sorted pair of shapes an internal vertex.
    shapes: list[list[tuple]] = [[()]]
    for j in range(1, internal + 1):
        found = set()
        for i in range(j):
            for left in shapes[i]:
                for right in shapes[j - 1 - i]:
                    found.add(tuple(sorted((left, right))))
        shapes.append(sorted(found))
    return shapes[internal]


def _shape_graph(shape: tuple) -> LabeledGraph:
    edges: list[tuple[int, int]] = []
    count = 0

    def walk(s: tuple) -> int:
        nonlocal count
        me = count
        count += 1
        for child in s:
            edges.append((me, walk(child)))
        return me

    walk(shape)
    return make_graph(count, edges)


def forest_code(g: LabeledGraph) -> bytes:
    """Isomorphism invariant of a forest that is complete: equal codes iff isomorphic.

    Each component is rooted at its center (or the better of two centers) and
    encoded as a labeled rooted tree.
    """
    if len(g.edges) > g.n:
        raise ValueError("graph is not a forest")
    adj = g.neighbors()
    seen = [False] * g.n
    codes = []
    for s in range(g.n):
        if seen[s]:
            continue
        comp, stack = [], [s]
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        if sum(len(adj[v]) for v in comp) != 2 * (len(comp) - 1):
            raise ValueError("graph is not a forest")
        codes.append(min(_rooted(g, adj, c).code for c in _centers(adj, comp)))
    return b"".join(sorted(codes))


def _centers(adj: list[list[int]], comp: list[int]) -> list[int]:
    deg = {v: len(adj[v]) for v in comp}
    layer = [v for v in comp if deg[v] <= 1]
    left = len(comp)
    while left > 2:
        left -= len(layer)
        nxt = []
        for v in layer:
            for w in adj[v]:
                deg[w] -= 1
                if deg[w] == 1:
                    nxt.append(w)
        layer = nxt
    return sorted(layer)


def _rooted(g: LabeledGraph, adj: list[list[int]], root: int) -> RootedTree:
    def build(v: int, parent: int) -> RootedTree:
        return RootedTree(g.features[v], tuple(build(w, v) for w in adj[v] if w != parent))

    return build(root, -1)


def partition_path_family(n: int) -> tuple[GraphCollection, list[list[int]]]:
    """Graphs P_n + P joined by one edge, grouped by the partition P of n.

    P_n has vertices 0..n-1 in path order; the parts of P follow in descending
    size. The cross edge joins the lowest-index endpoint u of the largest part
    to path vertex j-1, for j = 1..ceil(n/2). A one-vertex part has no degree-1
    vertex; its single vertex serves as u.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > MAX_PARTITION_PATHS:
        raise TooLarge(f"partition-path family is capped at n = {MAX_PARTITION_PATHS}")
    graphs, groups, sources = [], [], []
    for part in integer_partitions(n):
        edges = [(i, i + 1) for i in range(n - 1)]
        start = n
        u = n
        for size in part:
            edges += [(start + i, start + i + 1) for i in range(size - 1)]
            start += size
        group = []
        for j in range(1, (n + 1) // 2 + 1):
            group.append(len(graphs))
            graphs.append(make_graph(2 * n, edges + [(u, j - 1)]))
            sources.append(f"P={'+'.join(map(str, part))};j={j}")
        groups.append(group)
    return GraphCollection(graphs, sources=sources), groups


# ---------------------------------------------------------------------------
# Public enumeration.


def enumerate_family(spec: FamilySpec) -> GraphCollection:
    """One representative per isomorphism class of the family."""
    if spec.kind == "all":
        _check_all(spec.n)
        return _enumerate_space(spec.n)[1]
    if spec.kind == "all-up-to":
        _check_all(spec.n)
        graphs, sources = [], []
        for k in range(1, spec.n + 1):
            part = _enumerate_space(k)[1]
            graphs += part.graphs
            sources += part.sources
        return GraphCollection(graphs, sources=sources)
    if spec.kind == "otter":
        if spec.n > MAX_OTTER_ORDER:
            raise TooLarge(f"Otter trees are capped at order {MAX_OTTER_ORDER}")
        shapes = _otter_shapes((spec.n - 1) // 2)
        return GraphCollection([_shape_graph(s) for s in shapes], sources=[f"otter{spec.n}#{i}" for i in range(len(shapes))])
    if spec.kind == "partition-paths":
        coll, _ = partition_path_family(spec.n)
        keep, seen = [], set()
        for i, g in enumerate(coll.graphs):
            code = forest_code(g)
            if code not in seen:
                seen.add(code)
                keep.append(i)
        return GraphCollection([coll.graphs[i] for i in keep], sources=[coll.sources[i] for i in keep])
    return _enumerate_space(spec.n, spec.d, spec.q)[1]


# ---------------------------------------------------------------------------
# Edit trees over 1-WL classes.


@dataclass
class CoverTree:
    """Rooted tree whose vertices are 1-WL classes of the family.

    ``classes[c]`` lists indices into ``collection`` (isomorphism-class
    representatives); ``parent[root] == -1``.
    """

    collection: GraphCollection
    classes: list[list[int]]
    parent: list[int]
    root: int
    order: list[int] = field(default_factory=list)

    @property
    def children(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.classes]
        for c in self.order:
            if self.parent[c] >= 0:
                out[self.parent[c]].append(c)
        return out

    def representative(self, c: int) -> LabeledGraph:
        return self.collection.graphs[self.classes[c][0]]

    def path_length(self, a: int, b: int) -> int:
        up = {}
        x, k = a, 0
        while x >= 0:
            up[x] = k
            x, k = self.parent[x], k + 1
        x, k = b, 0
        while x not in up:
            x, k = self.parent[x], k + 1
        return k + up[x]


def _edits(space: _StateSpace, s: int, labeled: bool) -> list[int]:
    """States one edit away: edge deletion (unlabeled), or edge addition within the degree cap and feature change (labeled)."""
    edges, labels = space.decode(s)
    out = []
    if not labeled:
        for e in edges:
            out.append(space.encode([f for f in edges if f != e], labels))
        return out
    deg = [0] * space.n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    present = set(edges)
    for u, v in space.pairs:
        if (u, v) not in present and deg[u] < space.q and deg[v] < space.q:
            out.append(space.encode(edges + [(u, v)], labels))
    for v in range(space.n):
        for lab in range(space.d):
            if lab != labels[v]:
                out.append(space.encode(edges, labels[:v] + [lab] + labels[v + 1:]))
    return out


def cover_tree(spec: FamilySpec, L=STABLE) -> CoverTree:
    """Breadth-first edit tree over 1-WL classes (after L iterations).

    Unlabeled: the root is K_n and children come from deleting one edge of any
    member of the parent class. Labeled: the root is the edgeless graph with
    every vertex on label 0, and children come from adding one edge or changing
    one label. A class claimed by several parents goes to the first one in
    breadth-first order.
    """
    if spec.kind == "all":
        _check_all(spec.n)
        space, coll = _enumerate_space(spec.n)
        root_state = space.encode(space.pairs, [0] * spec.n)
        labeled = False
    elif spec.kind == "labeled":
        space, coll = _enumerate_space(spec.n, spec.d, spec.q)
        root_state = space.encode([], [0] * spec.n)
        labeled = True
    else:
        raise ValueError("cover trees exist for the 'all' and 'labeled' families")
    classes = quotient_classes(coll, "wl", L)
    class_of = [0] * len(coll)
    for c, members in enumerate(classes):
        for i in members:
            class_of[i] = c
    iso_of = space.canon
    root = class_of[int(iso_of[root_state])]
    parent = [-2] * len(classes)
    parent[root] = -1
    order = [root]
    queue = deque([root])
    while queue:
        c = queue.popleft()
        found = set()
        for i in classes[c]:
            for s in _edits(space, space.reps[i], labeled):
                child = class_of[int(iso_of[s])]
                if parent[child] == -2:
                    found.add(child)
        for child in sorted(found):
            parent[child] = c
            order.append(child)
            queue.append(child)
    if len(order) != len(classes):
        raise RuntimeError(f"edit tree reached {len(order)} of {len(classes)} classes")
    return CoverTree(coll, classes, parent, root, order)


def merge_cover(tree: CoverTree, k: int) -> list[list[int]]:
    """Group tree vertices into sets of at least k+1 classes within 2k tree edges of each other.

    Repeatedly cuts off every subtree whose height in the remaining tree is
    exactly k (such a subtree holds a path of k+1 vertices and has radius k
    from its top). When the remaining tree is shorter than k it joins an
    adjacent group if the union keeps tree diameter <= 2k, and otherwise
    becomes a last, possibly smaller, group. The count stays within
    ceil(m / (k+1)) either way.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    alive = [True] * len(tree.classes)
    children = tree.children
    groups: list[list[int]] = []
    while any(alive):
        height = [0] * len(alive)
        for c in reversed(tree.order):
            if alive[c]:
                height[c] = max((height[x] + 1 for x in children[c] if alive[x]), default=0)
        if height[tree.root] < k:
            rest = sorted(c for c in tree.order if alive[c])
            _place_leftover(tree, groups, rest, k)
            break
        for c in tree.order:
            if alive[c] and height[c] == k:
                group, stack = [], [c]
                while stack:
                    x = stack.pop()
                    group.append(x)
                    alive[x] = False
                    stack += [y for y in children[x] if alive[y]]
                groups.append(sorted(group))
    return groups


def _place_leftover(tree: CoverTree, groups: list[list[int]], rest: list[int], k: int) -> None:
    if len(rest) < k + 1:
        inside = set(rest)
        for g in groups:
            if tree.parent[g[0]] in inside or any(tree.parent[x] in inside for x in g):
                merged = g + rest
                if all(tree.path_length(a, b) <= 2 * k for a, b in itertools.combinations(merged, 2)):
                    g[:] = sorted(merged)
                    return
    groups.append(rest)
