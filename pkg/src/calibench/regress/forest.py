"""Bagged CART regression trees with vector-valued leaves.

Each tree is grown greedily on a bootstrap resample: axis-aligned splits
minimise the summed per-axis squared deviation of the targets, leaves store
the mean target vector, and the forest prediction is the mean over trees.
Ties between candidate splits break toward the lowest feature index and then
the lowest threshold so training is deterministic.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .._seeds import as_seed_sequence

DEFAULT_TREES = 100


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; leaves have feature == -1 and a value row."""

    feature: np.ndarray     # (n_nodes,) int, -1 for leaves
    threshold: np.ndarray   # (n_nodes,) float
    left: np.ndarray        # (n_nodes,) int child index, -1 for leaves
    right: np.ndarray       # (n_nodes,) int
    value: np.ndarray       # (n_nodes, n_targets), valid at leaves

    def predict_one(self, x: np.ndarray) -> np.ndarray:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        return self.value[i]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def depth(self) -> int:
        # leaf depth via parent walk would need links; recompute by scan
        depths = np.zeros(len(self.feature), dtype=int)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max()) if len(depths) else 0


def _best_split(x_node: np.ndarray, y_node: np.ndarray, min_leaf: int):
    """Best (sse, feature, threshold, left_mask) or None if nothing valid."""
    n, n_feat = x_node.shape
    total_sum = y_node.sum(axis=0)
    total_sq = float(np.sum(y_node * y_node))
    best = None
    for f in range(n_feat):
        xs_raw = x_node[:, f]
        order = np.argsort(xs_raw, kind="stable")
        xs = xs_raw[order]
        ys = y_node[order]
        csum = np.cumsum(ys, axis=0)
        csq = np.cumsum(np.sum(ys * ys, axis=1))
        k = np.arange(1, n)  # left sizes
        valid = (k >= min_leaf) & (n - k >= min_leaf) & (xs[1:] > xs[:-1])
        if not np.any(valid):
            continue
        lsum = csum[:-1]
        lsq = csq[:-1]
        left_sse = lsq - np.sum(lsum * lsum, axis=1) / k
        rsum = total_sum - lsum
        right_sse = (total_sq - lsq) - np.sum(rsum * rsum, axis=1) / (n - k)
        sse = np.where(valid, left_sse + right_sse, np.inf)
        j = int(np.argmin(sse))
        if best is None or sse[j] < best[0]:
            thr = 0.5 * (xs[j] + xs[j + 1])
            best = (float(sse[j]), f, thr, xs_raw <= thr)
    return best


def _grow_tree(X: np.ndarray, Y: np.ndarray, idx: np.ndarray,
               max_depth: int | None, min_leaf: int) -> Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[np.ndarray] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.zeros(Y.shape[1]))
        return len(feature) - 1

    root = new_node()
    stack = [(idx, 0, root)]
    while stack:
        node_idx, depth, pos = stack.pop()
        y_node = Y[node_idx]
        done = (len(node_idx) < 2 * min_leaf
                or (max_depth is not None and depth >= max_depth)
                or bool(np.all(y_node == y_node[0])))
        split = None if done else _best_split(X[node_idx], y_node, min_leaf)
        if split is None:
            value[pos] = y_node.mean(axis=0)
            continue
        _, f, thr, left_mask = split
        feature[pos] = f
        threshold[pos] = thr
        lpos, rpos = new_node(), new_node()
        left[pos], right[pos] = lpos, rpos
        stack.append((node_idx[left_mask], depth + 1, lpos))
        stack.append((node_idx[~left_mask], depth + 1, rpos))
    return Tree(np.asarray(feature, dtype=int), np.asarray(threshold, dtype=float),
                np.asarray(left, dtype=int), np.asarray(right, dtype=int),
                np.vstack(value))


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    n_features: int

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        out = np.zeros((len(X), self.trees[0].value.shape[1]))
        for tree in self.trees:
            for i, x in enumerate(X):
                out[i] += tree.predict_one(x)
        return out / len(self.trees)


def _fit_one_tree(X, Y, seed_seq, max_depth, min_leaf) -> Tree:
    rng = np.random.default_rng(seed_seq)
    bootstrap = rng.integers(0, len(X), len(X))
    return _grow_tree(X, Y, bootstrap, max_depth, min_leaf)


def fit_forest(X, Y, n_trees: int = DEFAULT_TREES, max_depth: int | None = None,
               *, min_leaf: int = 1, seed=0, n_workers: int | None = None) -> ForestModel:
    """Fit a bagged forest; per-tree seeds come from one spawned sequence, so
    parallel and serial runs build identical trees."""
    X = np.atleast_2d(np.asarray(X, float))
    Y = np.atleast_2d(np.asarray(Y, float))
    if len(X) == 0:
        raise ValueError("training set is empty")
    if len(X) != len(Y):
        raise ValueError("inputs and targets must have the same length")
    if n_trees < 1:
        raise ValueError("need at least one tree")
    seeds = as_seed_sequence(seed).spawn(n_trees)
    if n_workers and n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            trees = list(pool.map(lambda s: _fit_one_tree(X, Y, s, max_depth, min_leaf), seeds))
    else:
        trees = [_fit_one_tree(X, Y, s, max_depth, min_leaf) for s in seeds]
    return ForestModel(tuple(trees), X.shape[1])
