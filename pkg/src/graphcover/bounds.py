"""Closed-form generalization bounds for robustness-style arguments, plus parameter scans.

Every evaluator returns a BoundReport whose value is the sum of its terms in
the order listed. Logarithms are natural.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

LOG2 = math.log(2.0)
OTTER_GROWTH = 2.4832


class BoundError(ValueError):
    pass


class BadDelta(BoundError):
    pass


class BadCount(BoundError):
    pass


class BadEpsilon(BoundError):
    pass


class CellOverflow(BoundError):
    pass


class ParamConflict(BoundError):
    pass


class MissingGammaInverse(BoundError):
    pass


@dataclass
class BoundReport:
    formula: str
    inputs: dict
    terms: dict[str, float]
    flags: list[str] = field(default_factory=list)
    value: float = field(init=False)

    def __post_init__(self):
        total = 0.0
        for v in self.terms.values():
            total += v
        self.value = total

    def to_dict(self) -> dict:
        return {"formula": self.formula, "inputs": self.inputs, "value": self.value,
                "terms": self.terms, "flags": self.flags}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, default=_jsonable)


def _jsonable(x):
    if isinstance(x, GammaInverse):
        return {"x": x.xs, "y": x.ys}
    raise TypeError(type(x).__name__)


def _check(delta: float, sample_size: float, **counts: float) -> None:
    if not 0.0 < delta < 1.0:
        raise BadDelta(f"delta must lie in (0, 1), got {delta}")
    if sample_size < 1:
        raise BadCount(f"sample size must be >= 1, got {sample_size}")
    for name, v in counts.items():
        if v is None or v < 1:
            raise BadCount(f"{name} must be >= 1, got {v}")


def concentration(cells: float, M: float, delta: float, sample_size: float) -> float:
    """M * sqrt((2 * cells * log 2 + 2 log(1/delta)) / |S|)."""
    return M * math.sqrt((2.0 * cells * LOG2 + 2.0 * math.log(1.0 / delta)) / sample_size)


def xu_mannor_bound(K: float, epsilon: float, M: float, delta: float, sample_size: float) -> BoundReport:
    _check(delta, sample_size, K=K)
    return BoundReport("xu-mannor", dict(K=K, epsilon=epsilon, M=M, delta=delta, sample_size=sample_size),
                       {"robustness": float(epsilon), "concentration": concentration(K, M, delta, sample_size)})


def extended_bound(cells: Sequence[tuple[int, float]], K: float, M: float, delta: float, sample_size: float) -> BoundReport:
    """Per-cell radii weighted by the sample share of each cell."""
    _check(delta, sample_size, K=K)
    if sum(c for c, _ in cells) > sample_size:
        raise CellOverflow("cell counts exceed the sample size")
    robust = sum(c * e for c, e in cells) / sample_size
    return BoundReport("extended", dict(cells=[list(c) for c in cells], K=K, M=M, delta=delta, sample_size=sample_size),
                       {"robustness": robust, "concentration": concentration(K, M, delta, sample_size)})


def kawaguchi_bound(zeta: float, occupied: int, K: float, epsilon: float, delta: float, sample_size: float,
                    empirical_loss: float = 0.0) -> BoundReport:
    """One-sided data-dependent bound; ``occupied`` counts cells holding at least one sample."""
    _check(delta, sample_size, K=K, occupied=occupied)
    if occupied > K:
        raise BadCount("occupied cells cannot exceed K")
    a = occupied * math.log(2.0 * K / delta) / sample_size
    conc = zeta * ((math.sqrt(2.0) + 1.0) * math.sqrt(a) + 2.0 * a)
    return BoundReport("kawaguchi", dict(zeta=zeta, occupied=occupied, K=K, epsilon=epsilon, delta=delta,
                                         sample_size=sample_size, empirical_loss=empirical_loss),
                       {"empirical": float(empirical_loss), "robustness": float(epsilon), "concentration": conc})


def wl_classification_bound(m: float, delta: float, sample_size: float, M: float = 1.0) -> BoundReport:
    """Zero-radius partition into 2m cells (class times label); M = 1 is the 0-1 loss."""
    _check(delta, sample_size, m=m)
    return BoundReport("wl-classification", dict(m=m, M=M, delta=delta, sample_size=sample_size),
                       {"robustness": 0.0, "concentration": concentration(m, M, delta, sample_size)})


def wl_regression_bound(m: float, delta: float, sample_size: float, epsilon: float, M: float = 1.0) -> BoundReport:
    """Absolute loss on (0,1) targets: 4 eps + M sqrt(((2/eps) m log 2 + 2 log(1/delta)) / |S|)."""
    _check(delta, sample_size, m=m)
    if not 0.0 < epsilon < 1.0:
        raise BadEpsilon("epsilon must lie in (0, 1)")
    conc = concentration(m / epsilon, M, delta, sample_size)
    return BoundReport("wl-regression", dict(m=m, M=M, delta=delta, sample_size=sample_size, epsilon=epsilon),
                       {"robustness": 4.0 * epsilon, "concentration": conc})


def edit_radius(q: int, L: int) -> float:
    """2 q^L (1 - q^L) / (1 - q), written as a geometric sum so q = 1 is defined."""
    return 2.0 * q**L * sum(q**i for i in range(L))


def lipschitz_coefficient(L_loss: float, L_fnn: float, C_fd: float, n: int) -> float:
    """(2/n) * L_loss * L_fnn * C_fd."""
    return 2.0 / n * L_loss * L_fnn * C_fd


def _fd_family(name: str, L_loss: float, L_fnn: float, C_fd: float, n: int, M: float, delta: float, sample_size: float,
               covering: float | None, epsilon: float | None, m: float | None, k: int | None, b: float | None) -> BoundReport:
    cov_mode = covering is not None or epsilon is not None
    tree_mode = m is not None or k is not None or b is not None
    if cov_mode == tree_mode:
        raise ParamConflict("give exactly one of (covering, epsilon) or (m, k, b)")
    c = lipschitz_coefficient(L_loss, L_fnn, C_fd, n)
    base = dict(L_loss=L_loss, L_fnn=L_fnn, C_fd=C_fd, n=n, M=M, delta=delta, sample_size=sample_size)
    if cov_mode:
        if covering is None or epsilon is None:
            raise ParamConflict("covering variant needs both the covering number and epsilon")
        _check(delta, sample_size, covering=covering)
        return BoundReport(f"{name}-covering", dict(base, covering=covering, epsilon=epsilon),
                           {"robustness": c * epsilon, "concentration": concentration(2 * covering, M, delta, sample_size)})
    if m is None or k is None or b is None:
        raise ParamConflict("tree variant needs m, k and b")
    _check(delta, sample_size, m=m)
    if k < 0:
        raise BadCount("k must be non-negative")
    return BoundReport(f"{name}-tree", dict(base, m=m, k=k, b=b),
                       {"robustness": 2.0 * c * b * k, "concentration": concentration(2 * m / (k + 1), M, delta, sample_size)})


def fd_bound(L_loss: float, L_fnn: float, C_fd: float, n: int, M: float, delta: float, sample_size: float,
             covering: float | None = None, epsilon: float | None = None,
             m: float | None = None, k: int | None = None, b: float | None = None) -> BoundReport:
    """Forest-distance bound, either from a covering number at radius epsilon or from the edit tree (m, k, b)."""
    return _fd_family("fd", L_loss, L_fnn, C_fd, n, M, delta, sample_size, covering, epsilon, m, k, b)


def mean_fd_bound(L_loss: float, L_fnn: float, C_fd: float, n: int, M: float, delta: float, sample_size: float,
                  covering: float | None = None, epsilon: float | None = None,
                  m: float | None = None, k: int | None = None, b: float | None = None) -> BoundReport:
    """As fd_bound with the mean-aggregation constants (C_fd, m and b of the mean variant)."""
    return _fd_family("mean-fd", L_loss, L_fnn, C_fd, n, M, delta, sample_size, covering, epsilon, m, k, b)


@dataclass
class GammaInverse:
    """User-supplied non-decreasing table, linearly interpolated.

    Below the first abscissa the first value is used; beyond the last the
    value is unknown and reported as +inf.
    """

    xs: list[float]
    ys: list[float]

    def __post_init__(self):
        if not self.xs or len(self.xs) != len(self.ys):
            raise BoundError("gamma-inverse table needs matching, non-empty x and y lists")
        if any(b < a for a, b in zip(self.xs, self.xs[1:])) or any(b < a for a, b in zip(self.ys, self.ys[1:])):
            raise BoundError("gamma-inverse table must be non-decreasing")

    def __call__(self, x: float) -> float:
        if x > self.xs[-1]:
            return math.inf
        if x <= self.xs[0]:
            return self.ys[0]
        i = bisect.bisect_right(self.xs, x)
        x0, x1, y0, y1 = self.xs[i - 1], self.xs[i], self.ys[i - 1], self.ys[i]
        return y0 if x1 == x0 else y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    @classmethod
    def constant(cls, value: float = 0.0) -> "GammaInverse":
        return cls([0.0, math.inf], [value, value])


TREE_VARIANTS = ("covering", "tree", "otter", "up-to-n")


def tree_distance_bound(variant: str, gamma_inverse: GammaInverse | None, n: int, M: float, L_loss: float, L_fnn: float,
                        delta: float, sample_size: float, *, epsilon: float | None = None, covering: float | None = None,
                        k: int | None = None, m: float | None = None, w: float | None = None,
                        per_order: dict[int, int] | None = None, b: float = OTTER_GROWTH) -> BoundReport:
    """Tree-distance bounds. ``n`` is the order, except for "otter" where trees have 2n+1 vertices."""
    if gamma_inverse is None:
        raise MissingGammaInverse("the tree-distance bounds need a gamma-inverse table")
    if variant not in TREE_VARIANTS:
        raise ParamConflict(f"variant must be one of {TREE_VARIANTS}")
    lip = L_loss * L_fnn
    inputs = dict(variant=variant, n=n, M=M, L_loss=L_loss, L_fnn=L_fnn, delta=delta, sample_size=sample_size,
                  gamma_inverse=gamma_inverse)
    flags = ["gamma-inverse is a user-supplied table"]
    if variant == "covering":
        if epsilon is None or covering is None:
            raise ParamConflict("covering variant needs epsilon and the covering number")
        _check(delta, sample_size, covering=covering)
        first = lip * gamma_inverse(2.0 * epsilon / n**2)
        cells = covering
        inputs.update(epsilon=epsilon, covering=covering)
    else:
        if k is None or k < 0:
            raise ParamConflict("this variant needs k >= 0")
        inputs["k"] = k
        if variant == "tree":
            if m is None:
                raise ParamConflict("tree variant needs m")
            _check(delta, sample_size, m=m)
            first = lip * gamma_inverse(8.0 * k / n**2)
            cells = m / (k + 1)
            inputs["m"] = m
        elif variant == "otter":
            if w is None:
                raise ParamConflict("Otter variant needs w")
            _check(delta, sample_size, w=w)
            first = lip * gamma_inverse(16.0 * k / (2 * n + 1) ** 2)
            cells = w / b ** (2 * k)
            inputs.update(w=w, b=b)
        else:
            if m is None or not per_order:
                raise ParamConflict("up-to-n variant needs m and per-order sample counts")
            _check(delta, sample_size, m=m)
            if sum(per_order.values()) > sample_size:
                raise CellOverflow("per-order counts exceed the sample size")
            first = lip * sum(c / sample_size * gamma_inverse(8.0 * k / i**2) for i, c in sorted(per_order.items()))
            cells = m / (k + 1)
            inputs.update(m=m, per_order=per_order)
    if math.isinf(first):
        flags.append("gamma-inverse queried beyond its table")
    return BoundReport(f"tree-{variant}", inputs,
                       {"robustness": first, "concentration": concentration(2 * cells, M, delta, sample_size)}, flags)


def vc_bound(d_vc: float, delta: float, sample_size: float, empirical_loss: float = 0.0) -> BoundReport:
    """emp + sqrt(2 d log(eN/d) / N) + sqrt(log(1/delta) / (2N)); a negative log is flagged and yields NaN."""
    _check(delta, sample_size, d_vc=d_vc)
    log_term = math.log(math.e * sample_size / d_vc)
    flags = []
    if log_term <= 0:
        flags.append("log(eN/d) is not positive; the bound is vacuous")
    cap = math.sqrt(2.0 * d_vc * log_term / sample_size) if log_term >= 0 else math.nan
    return BoundReport("vc", dict(d_vc=d_vc, delta=delta, sample_size=sample_size, empirical_loss=empirical_loss),
                       {"empirical": float(empirical_loss), "capacity": cap,
                        "confidence": math.sqrt(math.log(1.0 / delta) / (2.0 * sample_size))}, flags)


# ---------------------------------------------------------------------------
# Scans.


@dataclass
class Scan:
    parameter: str
    points: list[tuple[float, BoundReport]]

    @property
    def best(self) -> tuple[float, BoundReport]:
        return min(self.points, key=lambda p: (p[1].value, p[0]))

    def to_csv(self) -> str:
        return f"{self.parameter},bound\n" + "".join(f"{x!r},{r.value!r}\n" for x, r in self.points)


def scan(parameter: str, values: Sequence[float], evaluate: Callable[[float], BoundReport]) -> Scan:
    return Scan(parameter, [(v, evaluate(v)) for v in values])


def k_scan(k_max: int, evaluate: Callable[[int], BoundReport]) -> Scan:
    return scan("k", list(range(k_max + 1)), evaluate)


def epsilon_grid(lo: float = 0.01, hi: float = 0.99, steps: int = 99) -> list[float]:
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


def delta_scan(evaluate: Callable[[float], BoundReport], target: float | None = None,
               deltas: Sequence[float] | None = None, tol: float = 5e-4) -> dict:
    """Bound values over a delta grid, and whether any delta reproduces ``target`` within ``tol``.

    Bounds are monotone in delta, so a match is searched by bisection between
    the grid ends.
    """
    deltas = list(deltas) if deltas is not None else [10.0**-e for e in range(1, 7)] + [0.2, 0.5, 0.9]
    deltas = sorted(deltas)
    rows = [(d, evaluate(d).value) for d in deltas]
    out: dict = {"rows": rows, "target": target, "matched": False, "delta": None}
    if target is None:
        return out
    lo, hi = 1e-300, 1.0 - 1e-12
    f_lo, f_hi = evaluate(lo).value - target, evaluate(hi).value - target
    if f_lo * f_hi > 0:
        out["closest"] = (f_lo if abs(f_lo) < abs(f_hi) else f_hi) + target
        return out
    for _ in range(200):
        mid = math.sqrt(lo * hi) if hi / lo > 10 else 0.5 * (lo + hi)
        f_mid = evaluate(mid).value - target
        if f_mid * f_lo > 0:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    delta = 0.5 * (lo + hi)
    if abs(evaluate(delta).value - target) <= tol:
        out.update(matched=True, delta=delta)
    return out
