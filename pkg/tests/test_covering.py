import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphcover.covering import (
    BALL_SLACK, TooLarge, cover_to_partition, covering_curve, exact_cover, greedy_cover, zero_classes,
)


def brute_cover_size(d, eps):
    """Smallest set of centers whose eps-balls hold every point, by trying subsets in size order."""
    m = d.shape[0]
    for k in range(1, m + 1):
        for centers in itertools.combinations(range(m), k):
            if (d[list(centers)] <= eps + BALL_SLACK).any(axis=0).all():
                return k
    return 0


def random_metric(rng, m, dim=2, dup=0):
    pts = rng.integers(0, 6, (m, dim)).astype(float)
    if dup:
        pts[-dup:] = pts[:dup]
    return np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)


@st.composite
def metrics(draw):
    m = draw(st.integers(1, 9))
    pts = np.array(draw(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=m, max_size=m)), float)
    return np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)


def test_cover_examples():
    d = np.array([[0, 1, 5], [1, 0, 5], [5, 5, 0]], float)
    assert greedy_cover(d, 0).centers == [0, 1, 2]
    c = greedy_cover(d, 1)
    assert c.centers == [0, 2] and c.assignment == [0, 0, 2] and c.sizes == [2, 1]
    assert exact_cover(d, 5).centers == [0]
    assert cover_to_partition(c, d) == [[0, 1], [2]]
    assert json.loads(c.to_json())["sizes"] == [2, 1]


def test_zero_classes_merge_duplicates():
    d = np.array([[0, 0, 2], [0, 0, 2], [2, 2, 0]], float)
    assert zero_classes(d) == [[0, 1], [2]]
    assert greedy_cover(d, 0).centers == [0, 2]


def test_cover_errors():
    d = np.zeros((30, 30))
    d[np.triu_indices(30, 1)] = 1
    d = d + d.T
    with pytest.raises(TooLarge):
        exact_cover(d, 0.5)
    with pytest.raises(ValueError):
        greedy_cover(d, -1)
    with pytest.raises(ValueError):
        greedy_cover(np.zeros((2, 3)), 1)


def test_exact_matches_brute_force(rng):
    for _ in range(80):
        m = int(rng.integers(1, 10))
        d = random_metric(rng, m, dup=int(rng.integers(0, m // 2 + 1)))
        eps = float(rng.integers(0, 8))
        ex = exact_cover(d, eps)
        want = brute_cover_size(d, eps)
        assert len(ex.centers) == want
        assert len(greedy_cover(d, eps).centers) >= want


@settings(max_examples=60, deadline=None)
@given(metrics(), st.integers(0, 10))
def test_cover_cells_have_small_diameter(d, eps):
    for cover in (greedy_cover(d, eps), exact_cover(d, eps)):
        assert all(d[i, cover.assignment[i]] <= eps + BALL_SLACK for i in range(d.shape[0]))
        for cell in cover_to_partition(cover, d):
            assert all(d[a, b] <= 2 * eps + 2 * BALL_SLACK for a, b in itertools.combinations(cell, 2))


@settings(max_examples=60, deadline=None)
@given(metrics())
def test_curve_monotone_with_fixed_ends(d):
    radii = [0, 0.5, 1, 2, 3, 5, 8, 20]
    rows = covering_curve(d, radii)
    greedy = [r["N_greedy"] for r in rows]
    exact = [r["N_exact"] for r in rows]
    assert all(a >= b for a, b in zip(greedy, greedy[1:]))
    assert all(a >= b for a, b in zip(exact, exact[1:]))
    assert greedy[0] == exact[0] == rows[0]["m"] == len(zero_classes(d))
    assert greedy[-1] == exact[-1] == 1
    assert all(e <= g for e, g in zip(exact, greedy))


def test_curve_reports_none_past_exact_limit(rng):
    d = random_metric(rng, 40, dim=4)
    rows = covering_curve(d, [0, 100], exact_limit=5)
    assert rows[0]["N_exact"] is None and rows[1]["N_greedy"] == 1
