"""Forward passes for three message-passing layer forms, with Lipschitz-constant accounting."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .graph_core import GraphCollection, LabeledGraph
from .metrics import ForestDistance, MeanForestDistance

MODEL_KINDS = ("ord", "sum", "mean")


class DimMismatch(ValueError):
    pass


class EmptyCollection(ValueError):
    pass


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass
class MpnnModel:
    """Bias-free ReLU message passing followed by mean pooling and a ReLU head.

    kind "ord": h_v <- relu((1/n) sum_{u in N(v)} h_u W2); W1 is unused.
    kind "sum": h_v <- relu(h_v W1 + sum_{u in N(v)} h_u W2).
    kind "mean": h_v <- relu(h_v W1 + mean_{u in N(v)} h_u W2), the mean being 0 for isolated v.
    The head applies its matrices with ReLU between them (none after the last).
    """

    kind: str
    layers: list[tuple[np.ndarray, np.ndarray]]
    head: list[np.ndarray]
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"kind must be one of {MODEL_KINDS}")
        dim = None
        for w1, w2 in self.layers:
            if w1.shape != w2.shape or (dim is not None and w1.shape[0] != dim):
                raise DimMismatch("layer dimensions do not chain")
            dim = w1.shape[1]
        for w in self.head:
            if dim is not None and w.shape[0] != dim:
                raise DimMismatch("head dimensions do not chain")
            dim = w.shape[1]

    @property
    def input_dim(self) -> int:
        return (self.layers[0][0] if self.layers else self.head[0]).shape[0]

    @property
    def depth(self) -> int:
        return len(self.layers)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "seed": self.seed,
                           "layers": [[w1.tolist(), w2.tolist()] for w1, w2 in self.layers],
                           "head": [w.tolist() for w in self.head]})

    @classmethod
    def from_json(cls, text: str) -> "MpnnModel":
        obj = json.loads(text)
        return cls(obj["kind"], [(np.array(a), np.array(b)) for a, b in obj["layers"]],
                   [np.array(w) for w in obj["head"]], obj.get("seed"))

    def scaled(self, factor: float) -> "MpnnModel":
        """Copy with every message-passing weight multiplied by ``factor``."""
        return MpnnModel(self.kind, [(w1 * factor, w2 * factor) for w1, w2 in self.layers],
                         [w.copy() for w in self.head], self.seed)


def _uniform(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    a = math.sqrt(6.0 / (d_in + d_out))
    return rng.uniform(-a, a, size=(d_in, d_out))


def random_model(kind: str, input_dim: int, widths: Sequence[int], head: Sequence[int] = (1,), seed: int = 0) -> MpnnModel:
    """Glorot-uniform weights; ``widths`` gives the output size of each message-passing layer."""
    rng = np.random.default_rng(seed)
    layers = []
    d = input_dim
    for w in widths:
        layers.append((_uniform(rng, d, w), _uniform(rng, d, w)))
        d = w
    mats = []
    for w in head:
        mats.append(_uniform(rng, d, w))
        d = w
    return MpnnModel(kind, layers, mats, seed)


def zero_model(kind: str, input_dim: int, widths: Sequence[int], head: Sequence[int] = (1,)) -> MpnnModel:
    m = random_model(kind, input_dim, widths, head)
    return MpnnModel(kind, [(0 * a, 0 * b) for a, b in m.layers], [0 * w for w in m.head], None)


class ForwardResult(NamedTuple):
    vertices: np.ndarray  # n x d_L
    pooled: np.ndarray    # mean of the vertex rows
    graph: np.ndarray     # head applied to pooled
    output: float         # first head coordinate


def forward(model: MpnnModel, g: LabeledGraph) -> ForwardResult:
    if g.d != model.input_dim:
        raise DimMismatch(f"graph features have dimension {g.d}, model expects {model.input_dim}")
    n = g.n
    h = g.feature_matrix()
    adj = np.zeros((n, n))
    for u, v in g.edges:
        adj[u, v] = adj[v, u] = 1.0
    if model.kind == "mean":
        deg = adj.sum(axis=1)
        agg = adj / np.where(deg > 0, deg, 1.0)[:, None]
    elif model.kind == "ord":
        agg = adj / n
    else:
        agg = adj
    for w1, w2 in model.layers:
        msg = agg @ h @ w2
        h = _relu(msg if model.kind == "ord" else h @ w1 + msg)
    pooled = h.mean(axis=0) if n else np.zeros(h.shape[1])
    out = pooled
    for i, w in enumerate(model.head):
        out = out @ w
        if i < len(model.head) - 1:
            out = _relu(out)
    return ForwardResult(h, pooled, out, float(out[0]) if out.size else 0.0)


# ---------------------------------------------------------------------------
# Lipschitz accounting.


def spectral_upper(m: np.ndarray, iterations: int = 50, slack: float = 0.01) -> float:
    """Upper bound on the largest singular value.

    Power iteration plus ``slack`` is the estimate; when the top two singular
    values are close it converges too slowly for the slack to cover, so the
    exact 2-norm is taken if larger.
    """
    if m.size == 0 or not np.any(m):
        return 0.0
    gram = m.T @ m
    x = np.ones(gram.shape[0]) / math.sqrt(gram.shape[0])
    # A deterministic start can be orthogonal to the top eigenvector; mix in a fixed perturbation.
    x += np.random.default_rng(0).normal(scale=1e-3, size=x.size)
    lam = 0.0
    for _ in range(iterations):
        y = gram @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        lam = float(x @ gram @ x)
    return max(math.sqrt(max(lam, 0.0)) * (1.0 + slack), float(np.linalg.norm(m, 2)))


def depth_constant(L: int) -> int:
    """Largest number of times a forest level is charged when the layer-wise bound is unrolled.

    Unrolling the triangle inequality through L layers charges level l of the
    padded forest binom(L, l) times, so the constant is the central binomial.
    """
    return math.comb(L, L // 2)


@dataclass
class LipschitzBudget:
    layers: list[float]
    head: float
    depth_constant: int
    product: float = field(init=False)

    def __post_init__(self):
        self.product = self.depth_constant * self.head * math.prod(self.layers)


def lipschitz_bound(model: MpnnModel) -> LipschitzBudget:
    """Per-layer constant max(||W1||, ||W2||) (||W2|| for "ord").

    The forest bound charges the self term and each neighbor term separately,
    so ||dx W1 + sum dy W2|| <= c (||dx|| + sum ||dy||) needs only that max.
    """
    per_layer = []
    for w1, w2 in model.layers:
        norms = [spectral_upper(w2)] if model.kind == "ord" else [spectral_upper(w1), spectral_upper(w2)]
        per_layer.append(max(norms))
    head = math.prod(spectral_upper(w) for w in model.head)
    return LipschitzBudget(per_layer, head, depth_constant(model.depth))


# ---------------------------------------------------------------------------
# Correlation between forest distance and output distance.


@dataclass
class Correlation:
    r: float
    degenerate: bool
    points: list[tuple[float, float]]

    def to_csv(self) -> str:
        return "fd,output_distance\n" + "".join(f"{a!r},{b!r}\n" for a, b in self.points)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, bool]:
    """(r, degenerate); degenerate when either coordinate is constant, with r = NaN."""
    x, y = np.asarray(xs, float), np.asarray(ys, float)
    if x.size < 2 or np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        return float("nan"), True
    return float(np.corrcoef(x, y)[0, 1]), False


def sample_pairs(m: int, pairs: int, seed: int) -> list[tuple[int, int]]:
    rng = np.random.default_rng(seed)
    return [tuple(int(v) for v in rng.integers(0, m, size=2)) for _ in range(pairs)]


def correlate(models: Sequence[MpnnModel], collection: GraphCollection, L: int, pairs: int, seed: int) -> list[Correlation]:
    """Scatter of (FD_L or mean FD_L, distance between graph embeddings) over sampled pairs, per model."""
    graphs = collection.graphs
    if not graphs:
        raise EmptyCollection("no graphs to sample from")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise DimMismatch("collection is not padded to a common order")
    chosen = sample_pairs(len(graphs), pairs, seed)
    dist: dict[str, list[float]] = {}
    for kind in {m.kind for m in models}:
        metric = MeanForestDistance(n) if kind == "mean" else ForestDistance(n)
        dist[kind] = [metric(graphs[i], graphs[j], L) for i, j in chosen]
    out = []
    for model in models:
        emb = {}
        for i in {i for pair in chosen for i in pair}:
            emb[i] = forward(model, graphs[i]).graph
        ys = [float(np.linalg.norm(emb[i] - emb[j])) for i, j in chosen]
        xs = dist[model.kind]
        r, degenerate = pearson(xs, ys)
        out.append(Correlation(r, degenerate, list(zip(xs, ys))))
    return out
