"""Reproducible experiment harness: configuration, manifests, plots, CLI."""

from .config import ExperimentConfig, config_digest
from .manifest import RunManifest, file_digest

__all__ = ["ExperimentConfig", "RunManifest", "config_digest", "file_digest"]
