"""Color refinement: 1-WL (neighbor color multisets) and 1-MWL (neighbor color frequencies)."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .graph_core import GraphCollection, LabeledGraph, disjoint_union


class _Stable:
    def __repr__(self) -> str:
        return "STABLE"


# Run until the partition stops refining.
STABLE = _Stable()


@dataclass(frozen=True)
class Coloring:
    colors: tuple[int, ...]
    iteration: int

    def classes(self) -> int:
        return len(set(self.colors))

    def histogram(self, vertices: Sequence[int] | None = None) -> Counter:
        vs = range(len(self.colors)) if vertices is None else vertices
        return Counter(self.colors[v] for v in vs)


class _Interner:
    """Injective map from canonical keys to consecutive integer ids.

    One table serves every iteration of a run, and each key embeds the previous
    color, so ids issued at iteration t are fresh with respect to t-1.
    """

    def __init__(self):
        self.table: dict = {}

    def __call__(self, key) -> int:
        got = self.table.get(key)
        if got is None:
            got = self.table[key] = len(self.table)
        return got


def _freq(colors: list[int]) -> tuple[tuple[int, Fraction], ...]:
    if not colors:
        return ()
    total = len(colors)
    return tuple(sorted((c, Fraction(k, total)) for c, k in Counter(colors).items()))


def _refine(g: LabeledGraph, L, mean: bool) -> list[Coloring]:
    intern = _Interner()
    adj = g.neighbors()
    cur = [intern(("init", x)) for x in g.features]
    out = [Coloring(tuple(cur), 0)]
    limit = L if isinstance(L, int) else None
    if limit is not None and limit < 0:
        raise ValueError("iteration count must be non-negative")
    t = 0
    while limit is None or t < limit:
        t += 1
        if mean:
            keys = [(cur[v], _freq([cur[w] for w in adj[v]])) for v in range(g.n)]
        else:
            keys = [(cur[v], tuple(sorted(cur[w] for w in adj[v]))) for v in range(g.n)]
        nxt = [intern((t, k)) for k in keys]
        stable = len(set(nxt)) == len(set(cur))
        cur = nxt
        out.append(Coloring(tuple(cur), t))
        if limit is None and stable:
            break
    return out


def wl1_refine(g: LabeledGraph, L=STABLE) -> list[Coloring]:
    """Colorings for t = 0..T. With ``STABLE``, T is the first iteration whose partition equals its predecessor's."""
    return _refine(g, L, mean=False)


def mwl1_refine(g: LabeledGraph, L=STABLE) -> list[Coloring]:
    """As ``wl1_refine`` but neighbors enter through exact rational color frequencies."""
    return _refine(g, L, mean=True)


def _joint(g: LabeledGraph, h: LabeledGraph, L, mean: bool) -> bool:
    u = disjoint_union(g, h)
    left, right = range(g.n), range(g.n, g.n + h.n)
    if g.n != h.n:
        return False
    for col in _refine(u, L, mean):
        if col.histogram(left) != col.histogram(right):
            return False
    return True


def wl1_joint_indistinguishable(g: LabeledGraph, h: LabeledGraph, L=STABLE) -> bool:
    return _joint(g, h, L, mean=False)


def mwl1_joint_indistinguishable(g: LabeledGraph, h: LabeledGraph, L=STABLE) -> bool:
    return _joint(g, h, L, mean=True)


def stable_depth(g: LabeledGraph, h: LabeledGraph, mean: bool = False) -> int:
    """Iteration at which joint refinement of g and h stops refining."""
    return _refine(disjoint_union(g, h), STABLE, mean)[-1].iteration


def _signature(g: LabeledGraph, L, mean: bool) -> tuple:
    """Per-graph invariant that agrees on indistinguishable pairs.

    Equal signatures are only a candidate test: a per-graph run cannot compare
    color ids across graphs, so candidates are confirmed with a joint run.
    """
    last = _refine(g, L, mean)[-1]
    return (g.n, tuple(sorted(Counter(last.colors).values())))


def quotient_classes(collection: GraphCollection | Sequence[LabeledGraph], mode: str = "wl", L=STABLE) -> list[list[int]]:
    """Partition of collection indices into indistinguishability classes.

    Classes are ordered by their smallest index, which is also the representative.
    """
    graphs = collection.graphs if isinstance(collection, GraphCollection) else list(collection)
    if mode not in ("wl", "mwl"):
        raise ValueError("mode must be 'wl' or 'mwl'")
    mean = mode == "mwl"
    joint = mwl1_joint_indistinguishable if mean else wl1_joint_indistinguishable
    classes: list[list[int]] = []
    buckets: dict[tuple, list[int]] = {}
    for i, g in enumerate(graphs):
        sig = _signature(g, L, mean)
        placed = False
        for ci in buckets.setdefault(sig, []):
            if joint(graphs[classes[ci][0]], g, L):
                classes[ci].append(i)
                placed = True
                break
        if not placed:
            buckets[sig].append(len(classes))
            classes.append([i])
    return classes
