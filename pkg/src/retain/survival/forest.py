"""Random survival forest: bootstrap trees, log-rank splits, Nelson-Aalen leaves.

Each tree draws its randomness from seed + tree_index, so serial and
parallel builds agree bit-for-bit and a stored seed reproduces the
ensemble. A subject's ensemble risk is its mean cumulative hazard summed
over the pooled training event times (ensemble mortality).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TREES = 100
DEFAULT_MIN_NODE_SIZE = 3


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    # leaf payload: Nelson-Aalen CHF sampled at pooled event times
    chf: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.chf is not None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"chf": [float(v) for v in self.chf]}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @staticmethod
    def from_dict(obj: dict) -> "_Node":
        if "chf" in obj:
            return _Node(chf=np.asarray(obj["chf"], dtype=float))
        return _Node(
            feature=obj["feature"],
            threshold=obj["threshold"],
            left=_Node.from_dict(obj["left"]),
            right=_Node.from_dict(obj["right"]),
        )


def _best_split_for_feature(
    x_f: np.ndarray,
    durations: np.ndarray,
    events: np.ndarray,
    event_times: np.ndarray,
    min_node_size: int,
) -> tuple[float, float] | None:
    """Best (score, threshold) over every distinct-value boundary, vectorized.

    For a left set L the two-sample log-rank statistic needs, per event
    time t, the at-risk and death counts inside L. Sorting by the feature
    makes those prefix sums, so one cumsum covers every threshold at once.
    """
    n = len(x_f)
    order = np.argsort(x_f, kind="stable")
    xs = x_f[order]
    boundaries = np.flatnonzero(xs[:-1] != xs[1:])  # split after sorted index b
    if boundaries.size == 0:
        return None
    left_sizes = boundaries + 1
    valid = (left_sizes >= min_node_size) & (n - left_sizes >= min_node_size)
    boundaries = boundaries[valid]
    if boundaries.size == 0:
        return None

    d_sorted = durations[order]
    e_sorted = events[order]
    at_risk = d_sorted[:, None] >= event_times[None, :]
    died = (d_sorted[:, None] == event_times[None, :]) & (e_sorted[:, None] == 1)
    n_t = at_risk.sum(axis=0).astype(float)
    d_t = died.sum(axis=0).astype(float)
    n_left = np.cumsum(at_risk, axis=0)[boundaries].astype(float)
    d_left = np.cumsum(died, axis=0)[boundaries].astype(float)

    frac = n_left / n_t  # n_t >= 1: event_times come from this node
    num = (d_left - d_t * frac).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        var_terms = d_t * frac * (1.0 - frac) * (n_t - d_t) / (n_t - 1.0)
    var_terms = np.where(n_t > 1.0, var_terms, 0.0)
    var = var_terms.sum(axis=1)
    scores = np.where(var > 0.0, num * num / np.where(var > 0.0, var, 1.0), 0.0)

    best = int(np.argmax(scores))
    if scores[best] <= 0.0:
        return None
    b = boundaries[best]
    threshold = (xs[b] + xs[b + 1]) / 2.0
    return float(scores[best]), float(threshold)


def _nelson_aalen_at(
    durations: np.ndarray, events: np.ndarray, grid: np.ndarray
) -> np.ndarray:
    """CHF evaluated on a fixed time grid (right-continuous step)."""
    event_times = np.unique(durations[events == 1])
    chf_steps = []
    total = 0.0
    for t in event_times:
        risk = int((durations >= t).sum())
        d = int(((durations == t) & (events == 1)).sum())
        total += d / risk
        chf_steps.append((t, total))
    out = np.zeros(len(grid))
    value = 0.0
    idx = 0
    for g_i, g in enumerate(grid):
        while idx < len(chf_steps) and chf_steps[idx][0] <= g:
            value = chf_steps[idx][1]
            idx += 1
        out[g_i] = value
    return out


def _grow(
    x: np.ndarray,
    durations: np.ndarray,
    events: np.ndarray,
    grid: np.ndarray,
    rng: np.random.Generator,
    mtry: int,
    min_node_size: int,
) -> _Node:
    n = len(durations)
    if n < 2 * min_node_size or np.all(events == 0):
        return _Node(chf=_nelson_aalen_at(durations, events, grid))
    event_times = np.unique(durations[events == 1])

    features = rng.permutation(x.shape[1])[:mtry]
    best_score = 0.0
    best: tuple[int, float] | None = None
    for f in features:
        found = _best_split_for_feature(
            x[:, f], durations, events, event_times, min_node_size
        )
        if found is not None and found[0] > best_score + 1e-12:
            best_score, threshold = found
            best = (int(f), threshold)

    if best is None:
        return _Node(chf=_nelson_aalen_at(durations, events, grid))
    f, threshold = best
    in_left = x[:, f] <= threshold
    left = _grow(x[in_left], durations[in_left], events[in_left], grid, rng, mtry, min_node_size)
    right = _grow(x[~in_left], durations[~in_left], events[~in_left], grid, rng, mtry, min_node_size)
    return _Node(feature=f, threshold=threshold, left=left, right=right)


def _tree_chf(node: _Node, row: np.ndarray) -> np.ndarray:
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.chf


@dataclass
class RandomSurvivalForest:
    trees: list[_Node]
    grid: np.ndarray  # pooled training event times
    seed: int
    n_trees: int
    mtry: int
    min_node_size: int
    bootstrap: bool

    def predict_chf(self, x: np.ndarray) -> np.ndarray:
        """Mean CHF over trees, one row per subject, on the pooled grid."""
        x = np.asarray(x, dtype=float)
        out = np.zeros((x.shape[0], len(self.grid)))
        for i, row in enumerate(x):
            acc = np.zeros(len(self.grid))
            for tree in self.trees:
                acc += _tree_chf(tree, row)
            out[i] = acc / len(self.trees)
        return out

    def predict_risk(self, x: np.ndarray) -> np.ndarray:
        """Ensemble mortality: CHF summed over the pooled event-time grid."""
        return self.predict_chf(x).sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "grid": [float(t) for t in self.grid],
            "seed": self.seed,
            "n_trees": self.n_trees,
            "mtry": self.mtry,
            "min_node_size": self.min_node_size,
            "bootstrap": self.bootstrap,
        }

    @staticmethod
    def from_dict(obj: dict) -> "RandomSurvivalForest":
        return RandomSurvivalForest(
            trees=[_Node.from_dict(t) for t in obj["trees"]],
            grid=np.asarray(obj["grid"], dtype=float),
            seed=obj["seed"],
            n_trees=obj["n_trees"],
            mtry=obj["mtry"],
            min_node_size=obj["min_node_size"],
            bootstrap=obj["bootstrap"],
        )


def fit_forest(
    x: np.ndarray,
    durations: np.ndarray,
    events: np.ndarray,
    seed: int,
    n_trees: int = DEFAULT_TREES,
    min_node_size: int = DEFAULT_MIN_NODE_SIZE,
    bootstrap: bool = True,
) -> RandomSurvivalForest:
    x = np.asarray(x, dtype=float)
    durations = np.asarray(durations)
    events = np.asarray(events)
    n, p = x.shape
    mtry = max(1, math.ceil(math.sqrt(p)))
    grid = np.unique(durations[events == 1]).astype(float)
    if grid.size == 0:
        raise ValueError("need at least one observed event")

    trees = []
    for b in range(n_trees):
        rng = np.random.default_rng(seed + b)
        if bootstrap:
            idx = rng.integers(0, n, size=n)
        else:
            idx = np.arange(n)
        trees.append(
            _grow(x[idx], durations[idx], events[idx], grid, rng, mtry, min_node_size)
        )
    return RandomSurvivalForest(
        trees=trees,
        grid=grid,
        seed=seed,
        n_trees=n_trees,
        mtry=mtry,
        min_node_size=min_node_size,
        bootstrap=bootstrap,
    )
