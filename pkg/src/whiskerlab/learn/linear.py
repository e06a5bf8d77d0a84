"""One-vs-rest linear classifier trained on the hinge loss.

Features are standardized with statistics from the training set only.  Each
class gets a linear score trained by full-batch subgradient descent on
mean hinge loss plus an L2 penalty, for a fixed epoch budget; there is no
sampling, so training is deterministic.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateModelError


@dataclass(frozen=True)
class LinearParams:
    reg: float = 1.0  # L2 penalty weight
    epochs: int = 400
    learning_rate: float = 0.05


class LinearMarginClassifier:
    kind = "linear_margin"

    def __init__(self, params: LinearParams = LinearParams(), seed: int = 0):
        self.params = params
        self.seed = seed  # unused: full-batch updates from a zero start
        self.classes_: list = []
        self.weights_: np.ndarray | None = None
        self.bias_: np.ndarray | None = None
        self.mean_: np.ndarray | None = None
        self.scale_: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LinearMarginClassifier":
        self.classes_ = sorted(set(y.tolist()))
        if len(self.classes_) < 2:
            raise DegenerateModelError("training set contains a single class")
        class_index = {c: i for i, c in enumerate(self.classes_)}
        yi = np.array([class_index[v] for v in y.tolist()])

        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        Xs = (X - self.mean_) / self.scale_

        n, d = Xs.shape
        n_classes = len(self.classes_)
        targets = np.full((n, n_classes), -1.0)
        targets[np.arange(n), yi] = 1.0

        W = np.zeros((d, n_classes))
        b = np.zeros(n_classes)
        lr = self.params.learning_rate
        for _ in range(self.params.epochs):
            margins = targets * (Xs @ W + b)
            active = targets * (margins < 1.0)  # subgradient of hinge wrt score
            grad_W = self.params.reg * W - Xs.T @ active / n
            grad_b = -active.sum(axis=0) / n
            W -= lr * grad_W
            b -= lr * grad_b
        self.weights_, self.bias_ = W, b
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Xs = (X - self.mean_) / self.scale_
        return Xs @ self.weights_ + self.bias_

    def predict(self, X: np.ndarray) -> np.ndarray:
        idx = np.argmax(self.decision_function(X), axis=1)
        return np.array(self.classes_, dtype=object)[idx]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {
                "reg": self.params.reg,
                "epochs": self.params.epochs,
                "learning_rate": self.params.learning_rate,
            },
            "seed": self.seed,
            "classes": self.classes_,
            "weights": self.weights_.tolist(),
            "bias": self.bias_.tolist(),
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LinearMarginClassifier":
        model = cls(LinearParams(**obj["params"]), obj["seed"])
        model.classes_ = obj["classes"]
        model.weights_ = np.array(obj["weights"])
        model.bias_ = np.array(obj["bias"])
        model.mean_ = np.array(obj["mean"])
        model.scale_ = np.array(obj["scale"])
        return model
