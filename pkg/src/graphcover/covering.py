"""Epsilon-covers of a finite pseudo-metric space given as a distance matrix."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .metrics import DistanceMatrix

# Slack on ball membership; distances from the LP route carry ~1e-9 noise.
BALL_SLACK = 1e-7
EXACT_LIMIT = 25


class TooLarge(ValueError):
    pass


@dataclass
class CoverResult:
    epsilon: float
    centers: list[int]
    assignment: list[int]
    method: str

    @property
    def sizes(self) -> list[int]:
        return [self.assignment.count(c) for c in self.centers]

    def to_json(self) -> str:
        return json.dumps({"epsilon": self.epsilon, "method": self.method, "centers": self.centers,
                           "sizes": self.sizes, "assignment": self.assignment})


def _values(dm) -> np.ndarray:
    d = np.asarray(dm.values if isinstance(dm, DistanceMatrix) else dm, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    return d


def zero_classes(d: np.ndarray) -> list[list[int]]:
    """Groups of indices at (numerically) zero distance from their group's first member."""
    classes: list[list[int]] = []
    for i in range(d.shape[0]):
        for c in classes:
            if d[c[0], i] <= BALL_SLACK:
                c.append(i)
                break
        else:
            classes.append([i])
    return classes


def _nearest(d: np.ndarray, centers: list[int]) -> list[int]:
    # argmin takes the first minimum, and centers are ascending: smallest index wins ties.
    cs = sorted(centers)
    return [cs[int(np.argmin(d[i, cs]))] for i in range(d.shape[0])]


def _balls(d: np.ndarray, reps: list[int], epsilon: float) -> np.ndarray:
    sub = d[np.ix_(reps, reps)]
    return sub <= epsilon + BALL_SLACK


def greedy_cover(dm, epsilon: float) -> CoverResult:
    """Repeatedly take the center whose ball holds the most uncovered classes; lowest index on ties."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    d = _values(dm)
    if d.shape[0] == 0:
        return CoverResult(epsilon, [], [], "greedy")
    reps = [c[0] for c in zero_classes(d)]
    ball = _balls(d, reps, epsilon)
    uncovered = np.ones(len(reps), dtype=bool)
    chosen = []
    while uncovered.any():
        gain = (ball & uncovered).sum(axis=1)
        best = int(np.argmax(gain))
        chosen.append(reps[best])
        uncovered &= ~ball[best]
    return CoverResult(epsilon, sorted(chosen), _nearest(d, chosen), "greedy")


def exact_cover(dm, epsilon: float, limit: int = EXACT_LIMIT) -> CoverResult:
    """Minimum number of centers drawn from the collection, by branch and bound.

    The incumbent starts from the greedy cover. A node is pruned when the
    centers used plus a packing lower bound (uncovered classes no single center
    can cover two of) reaches the incumbent. Branching is on the uncovered
    class with the fewest candidate centers.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    d = _values(dm)
    if d.shape[0] == 0:
        return CoverResult(epsilon, [], [], "exact")
    reps = [c[0] for c in zero_classes(d)]
    m = len(reps)
    if m > limit:
        raise TooLarge(f"{m} distinct classes exceed the exact-cover limit {limit}")
    ball = _balls(d, reps, epsilon)
    masks = [sum(1 << j for j in np.flatnonzero(ball[i])) for i in range(m)]
    coverers = [[i for i in range(m) if masks[i] >> j & 1] for j in range(m)]
    full = (1 << m) - 1

    # Indices below are positions in reps.
    best = greedy_cover(d[np.ix_(reps, reps)], epsilon).centers

    def lower_bound(covered: int) -> int:
        # Uncovered classes whose candidate sets are pairwise disjoint each need their own center.
        taken = 0
        count = 0
        for j in range(m):
            if not covered >> j & 1:
                cand = sum(1 << i for i in coverers[j])
                if not cand & taken:
                    taken |= cand
                    count += 1
        return count

    def search(covered: int, used: list[int]) -> None:
        nonlocal best
        if covered == full:
            if len(used) < len(best):
                best = list(used)
            return
        if len(used) + lower_bound(covered) >= len(best):
            return
        j = min((j for j in range(m) if not covered >> j & 1), key=lambda j: len(coverers[j]))
        for i in sorted(coverers[j], key=lambda i: -bin(masks[i] & ~covered).count("1")):
            used.append(i)
            search(covered | masks[i], used)
            used.pop()

    search(0, [])
    centers = sorted(reps[i] for i in best)
    return CoverResult(epsilon, centers, _nearest(d, centers), "exact")


def cover_to_partition(c: CoverResult, dm) -> list[list[int]]:
    """Nearest-center cells, one per center in ascending center order."""
    d = _values(dm)
    near = _nearest(d, c.centers)
    return [[i for i in range(d.shape[0]) if near[i] == ctr] for ctr in sorted(c.centers)]


def covering_curve(dm, radii, exact_limit: int = EXACT_LIMIT) -> list[dict]:
    """Rows of (epsilon, greedy size, exact size or None when too large, distinct class count).

    Radii are processed in ascending order. A cover at a smaller radius is also
    a cover at a larger one, so the greedy column reports the smallest greedy
    cover found at any radius up to the current one.
    """
    d = _values(dm)
    m = len(zero_classes(d))
    rows = []
    carried = None
    for eps in sorted(float(r) for r in radii):
        size = len(greedy_cover(d, eps).centers)
        carried = size if carried is None else min(size, carried)
        try:
            e = len(exact_cover(d, eps, exact_limit).centers)
        except TooLarge:
            e = None
        rows.append({"epsilon": eps, "N_greedy": carried, "N_exact": e, "m": m})
    return rows
