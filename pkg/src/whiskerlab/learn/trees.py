"""Shared decision-tree machinery for the ensemble models.

Split candidates come from per-feature quantile bins computed once on the
training matrix; split search then reduces to histogram scans, which keeps
full-depth forests and many boosting rounds fast enough in pure numpy.
Trees serialize to plain dicts (feature/threshold/child arrays) so models
round-trip through JSON.
"""

from dataclasses import dataclass, field

import numpy as np

_MIN_GAIN = 1e-12


def quantile_bin_edges(X: np.ndarray, max_bins: int = 256) -> list[np.ndarray]:
    """Per-feature ascending bin edges at (at most) max_bins quantiles."""
    qs = np.arange(1, max_bins) / max_bins
    edges = []
    for f in range(X.shape[1]):
        e = np.unique(np.quantile(X[:, f], qs))
        edges.append(e.astype(np.float64))
    return edges


def bin_features(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    """Bin index per value: bin b means edges[b-1] <= x < edges[b]."""
    binned = np.empty(X.shape, dtype=np.int32)
    for f, e in enumerate(edges):
        binned[:, f] = np.searchsorted(e, X[:, f], side="right")
    return binned


def offset_bins(binned: np.ndarray, edges: list[np.ndarray]) -> tuple[np.ndarray, int]:
    """Add per-feature offsets so one flat histogram covers all features."""
    max_bins = max(len(e) for e in edges) + 1
    offset = binned + np.arange(binned.shape[1], dtype=np.int32) * max_bins
    return offset, max_bins


@dataclass
class Tree:
    """Flat tree arrays; feature -1 marks a leaf, whose value is stored."""

    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)

    def add_leaf(self, value) -> int:
        return self._add(-1, 0.0, -1, -1, value)

    def add_split(self, feature: int, threshold: float) -> int:
        return self._add(int(feature), float(threshold), -1, -1, None)

    def _add(self, feature, threshold, left, right, value) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(left)
        self.right.append(right)
        self.value.append(value)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray, value_dim: int) -> np.ndarray:
        """Route all rows down the tree at once; samples go left when x < threshold."""
        out = np.empty((X.shape[0], value_dim), dtype=np.float64)
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if self.feature[node] < 0:
                out[idx] = self.value[node]
                continue
            go_left = X[idx, self.feature[node]] < self.threshold[node]
            stack.append((self.left[node], idx[go_left]))
            stack.append((self.right[node], idx[~go_left]))
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Tree":
        return cls(
            feature=list(obj["feature"]),
            threshold=[float(t) for t in obj["threshold"]],
            left=list(obj["left"]),
            right=list(obj["right"]),
            value=obj["value"],
        )


def grow_classification_tree(
    binned: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    edges: list[np.ndarray],
    rng: np.random.Generator,
    features_per_split: int,
) -> Tree:
    """Full-depth gini tree; a random feature subset is drawn at every split.

    Leaves store class probability vectors.  Growth stops when a node is
    pure or no candidate split reduces impurity.
    """
    tree = Tree()
    max_bins = max(len(e) for e in edges) + 1
    stack = [(np.arange(binned.shape[0]), None, None)]  # (indices, parent, side)
    while stack:
        idx, parent, side = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        n = idx.size
        node = None
        if n >= 2 and np.count_nonzero(counts) > 1:
            best = _best_classification_split(
                binned, y, idx, counts, n_classes, max_bins, rng, features_per_split
            )
            if best is not None:
                f, b = best
                node = tree.add_split(f, edges[f][b])
                go_left = binned[idx, f] <= b
                # Push right first so left is processed first (cosmetic only).
                stack.append((idx[~go_left], node, "right"))
                stack.append((idx[go_left], node, "left"))
        if node is None:
            node = tree.add_leaf((counts / n).tolist())
        if parent is not None:
            if side == "left":
                tree.left[parent] = node
            else:
                tree.right[parent] = node
    return tree


def _best_classification_split(binned, y, idx, counts, n_classes, max_bins, rng,
                               features_per_split):
    n = idx.size
    parent_score = float((counts**2).sum()) / n
    feats = rng.choice(binned.shape[1], size=min(features_per_split, binned.shape[1]),
                       replace=False)
    codes = binned[idx][:, feats] * n_classes + y[idx, None]
    best_gain, best = _MIN_GAIN, None
    for col, f in enumerate(feats):
        hist = np.bincount(codes[:, col], minlength=max_bins * n_classes)
        hist = hist.reshape(max_bins, n_classes).astype(np.float64)
        left = np.cumsum(hist, axis=0)[:-1]  # split after bin b keeps bins <= b left
        n_left = left.sum(axis=1)
        n_right = n - n_left
        valid = (n_left > 0) & (n_right > 0)
        if not valid.any():
            continue
        right = counts[None, :] - left
        with np.errstate(divide="ignore", invalid="ignore"):
            score = (left**2).sum(axis=1) / n_left + (right**2).sum(axis=1) / n_right
        score[~valid] = -np.inf
        b = int(np.argmax(score))
        gain = score[b] - parent_score
        if gain > best_gain:
            best_gain, best = gain, (int(f), b)
    return best


def grow_regression_tree(
    binned_offset: np.ndarray,
    target: np.ndarray,
    edges: list[np.ndarray],
    max_bins: int,
    max_depth: int,
    train_pred: np.ndarray,
) -> Tree:
    """Depth-limited squared-error tree over all features.

    ``binned_offset`` is the binned matrix with per-feature offsets already
    added (see :func:`offset_bins`), so one flat histogram pass covers every
    feature.  Training predictions are written into ``train_pred`` from the
    leaf partitions, avoiding a separate traversal.
    """
    d = binned_offset.shape[1]
    tree = Tree()
    stack = [(np.arange(binned_offset.shape[0]), 0, None, None)]
    while stack:
        idx, depth, parent, side = stack.pop()
        total = float(target[idx].sum())
        m = idx.size
        node = None
        if depth < max_depth and m >= 2:
            best = _best_regression_split(binned_offset, target, idx, total, d, max_bins)
            if best is not None:
                f, b = best
                node = tree.add_split(f, edges[f][b])
                go_left = binned_offset[idx, f] - f * max_bins <= b
                stack.append((idx[~go_left], depth + 1, node, "right"))
                stack.append((idx[go_left], depth + 1, node, "left"))
        if node is None:
            mean = total / m
            node = tree.add_leaf(mean)
            train_pred[idx] = mean
        if parent is not None:
            if side == "left":
                tree.left[parent] = node
            else:
                tree.right[parent] = node
    return tree


def _best_regression_split(binned_offset, target, idx, total, d, max_bins):
    m = idx.size
    flat = binned_offset[idx].ravel()
    cnt = np.bincount(flat, minlength=d * max_bins).reshape(d, max_bins)
    sums = np.bincount(flat, weights=np.repeat(target[idx], d), minlength=d * max_bins)
    sums = sums.reshape(d, max_bins)

    n_left = np.cumsum(cnt, axis=1)[:, :-1]
    s_left = np.cumsum(sums, axis=1)[:, :-1]
    n_right = m - n_left
    s_right = total - s_left
    valid = (n_left > 0) & (n_right > 0)
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        score = s_left**2 / n_left + s_right**2 / n_right
    score[~valid] = -np.inf
    flat_best = int(np.argmax(score))
    f, b = divmod(flat_best, max_bins - 1)
    if score[f, b] - total * total / m <= _MIN_GAIN:
        return None
    return f, b
