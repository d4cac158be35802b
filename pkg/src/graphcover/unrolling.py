"""Unrolling trees, mean-pruning, canonical codes and padded forests."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property, reduce

from .graph_core import BadVertex, LabeledGraph

DEFAULT_VERTEX_CAP = 10**7


class ResourceCap(RuntimeError):
    pass


class OrderTooSmall(ValueError):
    pass


def _label_bytes(x: tuple[float, ...]) -> bytes:
    # repr is the shortest round-tripping decimal, so equal floats give equal bytes.
    return ",".join(repr(c + 0.0) for c in x).encode()


@dataclass(frozen=True, eq=False)
class RootedTree:
    """Immutable labeled rooted tree. Subtrees may be shared between parents."""

    label: tuple[float, ...]
    children: tuple["RootedTree", ...] = ()
    scale: int = 1

    @cached_property
    def code(self) -> bytes:
        """AHU code: label then sorted child codes. Equal codes iff isomorphic as labeled rooted trees."""
        return b"(" + _label_bytes(self.label) + b"".join(sorted(c.code for c in self.children)) + b")"

    @cached_property
    def depth(self) -> int:
        return 1 + max(c.depth for c in self.children) if self.children else 0

    @cached_property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)

    def levels(self) -> list[list["RootedTree"]]:
        out, frontier = [], [self]
        while frontier:
            out.append(frontier)
            frontier = [c for t in frontier for c in t.children]
        return out

    def to_text(self) -> str:
        lab = ",".join(f"{c:g}" for c in self.label)
        return f"({lab}" + "".join(c.to_text() for c in self.children) + ")"


def canonical_code(t: RootedTree) -> bytes:
    return t.code


def unroll(g: LabeledGraph, u: int, L: int) -> RootedTree:
    """Depth-L unrolling: the root carries u's feature, and each neighbor's depth-(L-1) unrolling hangs below it."""
    if not 0 <= u < g.n:
        raise BadVertex(f"vertex {u} not in [0, {g.n})")
    if L < 0:
        raise ValueError("depth must be non-negative")
    adj = g.neighbors()
    memo: dict[tuple[int, int], RootedTree] = {}

    def build(v: int, depth: int) -> RootedTree:
        key = (v, depth)
        if key not in memo:
            kids = tuple(build(w, depth - 1) for w in adj[v]) if depth else ()
            memo[key] = RootedTree(g.features[v], kids)
        return memo[key]

    return build(u, L)


def _prune_root(label: tuple[float, ...], kids: list[RootedTree]) -> RootedTree:
    if not kids:
        return RootedTree(label, ())
    by_code: dict[bytes, list[RootedTree]] = {}
    for k in kids:
        by_code.setdefault(k.code, []).append(k)
    c = reduce(math.gcd, (len(v) for v in by_code.values()))
    kept = [t for code in sorted(by_code) for t in by_code[code][: len(by_code[code]) // c]]
    return RootedTree(label, tuple(kept))


def mean_prune(t: RootedTree) -> RootedTree:
    """Bottom-up gcd pruning of sibling subtree types.

    Children are pruned before their parent is inspected, which processes the
    levels from the deepest internal level up to the root.
    """
    memo: dict[int, RootedTree] = {}

    def go(node: RootedTree) -> RootedTree:
        got = memo.get(id(node))
        if got is None:
            got = memo[id(node)] = _prune_root(node.label, [go(c) for c in node.children])
        return got

    return go(t)


def mean_unroll(g: LabeledGraph, u: int, L: int) -> RootedTree:
    """Mean-pruned unrolling built recursively: attach the neighbors' pruned trees, then prune the root."""
    if not 0 <= u < g.n:
        raise BadVertex(f"vertex {u} not in [0, {g.n})")
    adj = g.neighbors()
    memo: dict[tuple[int, int], RootedTree] = {}

    def build(v: int, depth: int) -> RootedTree:
        key = (v, depth)
        if key not in memo:
            kids = [build(w, depth - 1) for w in adj[v]] if depth else []
            memo[key] = _prune_root(g.features[v], kids)
        return memo[key]

    return build(u, L)


def forest_vertex_count(n: int, L: int) -> int:
    """Vertices in n complete (n-1)-ary trees of depth L."""
    if n < 2:
        raise OrderTooSmall("forests need n >= 2")
    if n == 2:
        return 2 * (L + 1)
    return n * ((n - 1) ** (L + 1) - 1) // (n - 2)


@dataclass
class PaddedForest:
    trees: list[RootedTree]
    n: int
    depth: int
    mean: bool = False
    real_vertices: int = field(default=0)


def _zero_tree(d: int, depth: int, arity: int, memo: dict) -> RootedTree:
    key = depth
    if key not in memo:
        kids = tuple([_zero_tree(d, depth - 1, arity, memo)] * arity) if depth else ()
        memo[key] = RootedTree((0.0,) * d, kids)
    return memo[key]


def _pad(t: RootedTree, depth: int, arity: int, d: int, zeros: dict, scale: int = 1, mean: bool = False) -> RootedTree:
    """Copy of t with every vertex above depth L completed to ``arity`` children.

    Mean mode divides each feature by the vertex's scale, where a child's scale
    is its parent's scale times the parent's (pruned, unpadded) child count.
    """
    label = tuple(c / scale for c in t.label) if mean else t.label
    if depth == 0:
        return RootedTree(label, (), scale)
    child_scale = scale * max(len(t.children), 1)
    kids = [_pad(c, depth - 1, arity, d, zeros, child_scale, mean) for c in t.children]
    kids += [_zero_tree(d, depth - 1, arity, zeros)] * (arity - len(kids))
    return RootedTree(label, tuple(kids), scale)


def build_forest(g: LabeledGraph, L: int, mode: str = "sum", vertex_cap: int = DEFAULT_VERTEX_CAP) -> PaddedForest:
    """Padded unrolling forest: n trees, each a complete (n-1)-ary tree of depth L.

    ``mode="sum"`` pads plain unrollings; ``mode="mean"`` pads scaled mean-pruned unrollings.
    """
    if g.n < 2:
        raise OrderTooSmall("forests need n >= 2")
    if mode not in ("sum", "mean"):
        raise ValueError("mode must be 'sum' or 'mean'")
    total = forest_vertex_count(g.n, L)
    if total > vertex_cap:
        raise ResourceCap(f"padded forest needs {total} vertices, cap is {vertex_cap}")
    mean = mode == "mean"
    zeros: dict = {}
    trees = []
    real = 0
    for u in range(g.n):
        t = mean_unroll(g, u, L) if mean else unroll(g, u, L)
        real += t.size
        trees.append(_pad(t, L, g.n - 1, g.d, zeros, 1, mean))
    return PaddedForest(trees, g.n, L, mean, real)


def tree_signature(t: RootedTree) -> Counter:
    """Multiset of (level, label) pairs; a cheap isomorphism invariant used in tests."""
    return Counter((lvl, node.label) for lvl, nodes in enumerate(t.levels()) for node in nodes)
