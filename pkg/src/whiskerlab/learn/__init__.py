"""Texture classification: dataset assembly, three classifier families, evaluation."""

from .dataset import CollectionPlan, LabeledDataset, build_dataset, split
from .evaluate import (
    TASKS,
    EvalReport,
    ModelSpec,
    evaluate,
    load_model,
    render_report_markdown,
    save_model,
    save_report_csv,
    train,
)
from .linear import LinearMarginClassifier, LinearParams
from .forest import BaggedTreesClassifier, ForestParams
from .boosting import BoostedTreesClassifier, BoostParams

__all__ = [
    "BaggedTreesClassifier",
    "BoostedTreesClassifier",
    "BoostParams",
    "CollectionPlan",
    "EvalReport",
    "ForestParams",
    "LabeledDataset",
    "LinearMarginClassifier",
    "LinearParams",
    "ModelSpec",
    "TASKS",
    "build_dataset",
    "evaluate",
    "load_model",
    "render_report_markdown",
    "save_model",
    "save_report_csv",
    "split",
    "train",
]
