"""CART trees grown breadth-first over binned features, and bagged ensembles of them.

Splits minimise weighted Gini impurity. Each feature is binned once per fit:
columns with at most ``max_bins`` distinct values get one bin per value
(thresholds at midpoints), others get quantile bins. Three-valued phishing
features and chain-mapped features of them are therefore split exactly.
"""

from __future__ import annotations

import numpy as np

LEAF = -1


class Binner:
    def __init__(self, X: np.ndarray, max_bins: int = 64):
        self.edges = []
        self.reps = []
        for col in X.T:
            u = np.unique(col)
            if len(u) <= max_bins:
                edges = (u[:-1] + u[1:]) / 2.0
                reps = u
            else:
                qs = np.quantile(col, np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
                edges = np.unique(qs)
                codes = np.searchsorted(edges, col, side="left")
                sums = np.bincount(codes, weights=col, minlength=len(edges) + 1)
                counts = np.bincount(codes, minlength=len(edges) + 1)
                # empty bins get their upper edge, keeping reps sorted
                fallback = np.append(edges, col.max())
                reps = np.where(counts > 0, sums / np.maximum(counts, 1), fallback)
            self.edges.append(edges)
            self.reps.append(reps)
        self.n_bins = np.array([len(e) + 1 for e in self.edges])
        self.offsets = np.concatenate([[0], np.cumsum(self.n_bins)[:-1]]).astype(np.int64)
        self.total = int(self.n_bins.sum())
        self.feature_of = np.repeat(np.arange(len(self.edges)), self.n_bins)
        self.flat_edges = np.concatenate([np.append(e, np.inf) for e in self.edges])
        self.flat_reps = np.concatenate(self.reps)

    def codes(self, X: np.ndarray) -> np.ndarray:
        return np.stack(
            [np.searchsorted(e, X[:, j], side="left") for j, e in enumerate(self.edges)], axis=1
        ).astype(np.int64)


class Tree:
    """Array-encoded binary tree; ``value`` holds P(phishing) at each node."""

    def __init__(self, feature, threshold, left, right, value, depth):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)
        self.depth = int(depth)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        for _ in range(self.depth + 1):
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                break
            go_left = X[rows, np.where(inner, f, 0)] <= self.threshold[node]
            node = np.where(inner, np.where(go_left, self.left[node], self.right[node]), node)
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"], d["depth"])


def _segment_cumsum(H: np.ndarray, binner: Binner) -> np.ndarray:
    """Cumulative counts within each feature's bin segment along axis 1."""
    C = np.cumsum(H, axis=1)
    start = np.repeat(binner.offsets, binner.n_bins)
    base = np.concatenate([np.zeros_like(C[:, :1]), C[:, :-1]], axis=1)
    return C - base[:, start]


def grow_tree(
    codes: np.ndarray,
    y: np.ndarray,
    weight: np.ndarray,
    binner: Binner,
    rng: np.random.Generator,
    max_depth: int | None = None,
    min_samples_leaf: float = 1,
    max_features: int | None = None,
    splitter: str = "best",
) -> Tree:
    n_feat = codes.shape[1]
    T = binner.total
    last_bin = np.zeros(T, dtype=bool)
    last_bin[binner.offsets + binner.n_bins - 1] = True
    max_depth = np.inf if max_depth is None else max_depth

    rows = np.flatnonzero(weight > 0)
    codes_a = codes[rows]
    y_a = y[rows]
    w_a = weight[rows]
    flat_codes = codes_a + binner.offsets[None, :]
    wy1 = w_a * (y_a == 1)
    wy0 = w_a * (y_a == 0)

    feature = [np.array([LEAF])]
    threshold = [np.zeros(1)]
    left = [np.array([LEAF])]
    right = [np.array([LEAF])]
    value = []
    n_nodes = 1
    frontier = np.array([0])  # global ids of the nodes at this depth
    local = np.zeros(len(rows), dtype=np.int64)  # row -> position in frontier, -1 once settled
    live = np.arange(len(rows))
    depth = 0
    tree_depth = 0

    while True:
        m = len(frontier)
        r_local = local[live]
        flat = (r_local[:, None] * T + flat_codes[live]).ravel()
        H1 = np.bincount(flat, weights=np.repeat(wy1[live], n_feat), minlength=m * T).reshape(m, T)
        H0 = np.bincount(flat, weights=np.repeat(wy0[live], n_feat), minlength=m * T).reshape(m, T)
        seg0 = binner.n_bins[0]
        n1 = H1[:, :seg0].sum(axis=1)
        n0 = H0[:, :seg0].sum(axis=1)
        tot = n0 + n1
        value.append(np.where(tot > 0, n1 / np.where(tot > 0, tot, 1), 0.5))

        can_split = (n0 > 0) & (n1 > 0) & (tot >= 2 * min_samples_leaf) & (depth < max_depth)
        best_t = np.full(m, -1, dtype=np.int64)
        todo = np.flatnonzero(can_split)
        chunk = max(1, 2_000_000 // max(T, 1))
        for c0 in range(0, len(todo), chunk):
            idx = todo[c0 : c0 + chunk]
            best_t[idx] = _best_splits(
                H0[idx], H1[idx], n0[idx], n1[idx], binner, last_bin, rng,
                min_samples_leaf, max_features, splitter,
            )

        split_k = np.flatnonzero(best_t >= 0)
        if len(split_k) == 0:
            break
        # the frontier's inner nodes were created at the previous level; patch them now
        level_feat = np.full(m, LEAF)
        level_thr = np.zeros(m)
        level_left = np.full(m, LEAF)
        level_right = np.full(m, LEAF)
        t_split = best_t[split_k]
        level_feat[split_k] = binner.feature_of[t_split]
        level_thr[split_k] = binner.flat_edges[t_split]
        child_pos = np.full((m, 2), -1, dtype=np.int64)
        child_pos[split_k, 0] = 2 * np.arange(len(split_k))
        child_pos[split_k, 1] = 2 * np.arange(len(split_k)) + 1
        level_left[split_k] = n_nodes + child_pos[split_k, 0]
        level_right[split_k] = n_nodes + child_pos[split_k, 1]
        feature[-1], threshold[-1], left[-1], right[-1] = level_feat, level_thr, level_left, level_right
        n_new = 2 * len(split_k)
        frontier = np.arange(n_nodes, n_nodes + n_new)
        n_nodes += n_new
        feature.append(np.full(n_new, LEAF))
        threshold.append(np.zeros(n_new))
        left.append(np.full(n_new, LEAF))
        right.append(np.full(n_new, LEAF))
        tree_depth = depth + 1

        t_of = best_t[r_local]
        has = t_of >= 0
        t_safe = np.maximum(t_of, 0)
        f_of = binner.feature_of[t_safe]
        go_left = flat_codes[live, f_of] <= t_safe
        new_local = np.where(go_left, child_pos[r_local, 0], child_pos[r_local, 1])
        local[live] = np.where(has, new_local, -1)
        live = live[has]
        depth += 1

    return Tree(
        np.concatenate(feature), np.concatenate(threshold), np.concatenate(left),
        np.concatenate(right), np.concatenate(value), tree_depth,
    )


def _best_splits(h0, h1, n0, n1, binner, last_bin, rng, min_samples_leaf, max_features, splitter):
    n_feat = len(binner.n_bins)
    L0 = _segment_cumsum(h0, binner)
    L1 = _segment_cumsum(h1, binner)
    NL = L0 + L1
    NR = (n0 + n1)[:, None] - NL
    valid = (NL >= min_samples_leaf) & (NR >= min_samples_leaf) & ~last_bin[None, :]
    valid &= (NL > 0) & (NR > 0)
    if max_features is not None and max_features < n_feat:
        keys = rng.random((len(h0), n_feat))
        chosen = np.argsort(keys, axis=1)[:, :max_features]
        fmask = np.zeros((len(h0), n_feat), dtype=bool)
        np.put_along_axis(fmask, chosen, True, axis=1)
        valid &= fmask[:, binner.feature_of]
    if splitter == "random":
        valid &= _random_threshold_mask(h0 + h1, binner, rng)
    R0 = n0[:, None] - L0
    R1 = n1[:, None] - L1
    with np.errstate(divide="ignore", invalid="ignore"):
        score = (NL - (L0**2 + L1**2) / NL) + (NR - (R0**2 + R1**2) / NR)
    score = np.where(valid, score, np.inf)
    t = np.argmin(score, axis=1)
    ok = np.isfinite(score[np.arange(len(h0)), t])
    return np.where(ok, t, -1)


def _random_threshold_mask(H: np.ndarray, binner: Binner, rng: np.random.Generator) -> np.ndarray:
    """One uniformly drawn threshold per (node, feature), between the node's min and max value."""
    m, T = H.shape
    present = H > 0
    pos = np.arange(T)
    lo = np.minimum.reduceat(np.where(present, pos, T), binner.offsets, axis=1)
    hi = np.maximum.reduceat(np.where(present, pos, -1), binner.offsets, axis=1)
    ok = hi > lo
    lo_c, hi_c = np.where(ok, lo, 0), np.where(ok, hi, 0)
    reps = binner.flat_reps
    t = reps[lo_c] + rng.random(lo.shape) * (reps[hi_c] - reps[lo_c])
    f = binner.feature_of
    inside = (pos >= lo_c[:, f]) & (pos <= hi_c[:, f]) & (reps[None, :] <= t[:, f])
    # largest bin in [lo, hi] whose representative is <= t, kept below hi
    b = lo_c - 1 + np.add.reduceat(inside, binner.offsets, axis=1)
    b = np.clip(b, lo_c, hi_c - 1)
    mask = np.zeros((m, T), dtype=bool)
    r, c = np.nonzero(ok)
    mask[r, b[r, c]] = True
    return mask
