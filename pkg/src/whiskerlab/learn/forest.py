"""Bagged full-depth gini trees with per-split feature subsampling."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateModelError
from .trees import Tree, bin_features, grow_classification_tree, quantile_bin_edges


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_bins: int = 256


class BaggedTreesClassifier:
    """Ensemble of bootstrap-trained trees; prediction averages leaf probabilities.

    Each tree sees a bootstrap resample of the training set and draws a fresh
    sqrt(d)-sized feature subset at every split.  Training is deterministic
    under a fixed seed.
    """

    kind = "bagged_trees"

    def __init__(self, params: ForestParams = ForestParams(), seed: int = 0):
        self.params = params
        self.seed = seed
        self.classes_: list = []
        self.trees_: list[Tree] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "BaggedTreesClassifier":
        self.classes_ = sorted(set(y.tolist()))
        if len(self.classes_) < 2:
            raise DegenerateModelError("training set contains a single class")
        class_index = {c: i for i, c in enumerate(self.classes_)}
        yi = np.array([class_index[v] for v in y.tolist()], dtype=np.int64)

        edges = quantile_bin_edges(X, self.params.max_bins)
        binned = bin_features(X, edges)
        n, d = X.shape
        features_per_split = max(1, math.isqrt(d) + (0 if math.isqrt(d) ** 2 == d else 1))

        root = np.random.default_rng(self.seed)
        tree_seeds = root.integers(0, 2**63 - 1, size=self.params.n_trees)
        self.trees_ = []
        for ts in tree_seeds:
            rng = np.random.default_rng(int(ts))
            boot = rng.integers(0, n, size=n)
            tree = grow_classification_tree(
                binned[boot], yi[boot], len(self.classes_), edges, rng, features_per_split
            )
            self.trees_.append(tree)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        probs = np.zeros((X.shape[0], len(self.classes_)))
        for tree in self.trees_:
            probs += tree.predict(X, len(self.classes_))
        return probs / len(self.trees_)

    def predict(self, X: np.ndarray) -> np.ndarray:
        idx = np.argmax(self.predict_proba(X), axis=1)
        return np.array(self.classes_, dtype=object)[idx]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {"n_trees": self.params.n_trees, "max_bins": self.params.max_bins},
            "seed": self.seed,
            "classes": self.classes_,
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BaggedTreesClassifier":
        model = cls(ForestParams(**obj["params"]), obj["seed"])
        model.classes_ = obj["classes"]
        model.trees_ = [Tree.from_dict(t) for t in obj["trees"]]
        return model
