"""Versioned model artifacts: structured JSON, human-inspectable, portable.

An artifact bundles the model parameters, the ModelConfig that produced
them, the normalization parameters needed to score raw records, and a
training fingerprint. Floats round-trip exactly through JSON (shortest
repr), so a loaded model predicts bit-identically to the saved one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import CorruptArtifact, VersionMismatch
from ..preprocess import NormParams
from . import FOREST, LINEAR, LOGISTIC, TREE, ModelConfig
from .forest import ForestModel
from .linear import LinearModel
from .logistic import LogisticModel
from .tree import TreeModel

FORMAT_VERSION = 1

_FAMILY_OF_TYPE = {
    LinearModel: LINEAR,
    LogisticModel: LOGISTIC,
    TreeModel: TREE,
    ForestModel: FOREST,
}
_TYPE_OF_FAMILY = {
    LINEAR: LinearModel,
    LOGISTIC: LogisticModel,
    TREE: TreeModel,
    FOREST: ForestModel,
}


@dataclass
class ModelArtifact:
    config: ModelConfig
    model: object
    norm: NormParams
    fingerprint: dict
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "config": self.config.to_dict(),
            "parameters": self.model.to_dict(),
            "norm": self.norm.to_dict(),
            "training_fingerprint": dict(self.fingerprint),
        }


def save_model(model, config: ModelConfig, norm: NormParams, fingerprint: dict, path) -> ModelArtifact:
    """Write the artifact JSON; returns the in-memory artifact."""
    family = _FAMILY_OF_TYPE.get(type(model))
    if family is None or family != config.family:
        raise CorruptArtifact(
            f"model type {type(model).__name__} does not match config family {config.family!r}"
        )
    artifact = ModelArtifact(config=config, model=model, norm=norm, fingerprint=fingerprint)
    payload = json.dumps(artifact.to_dict(), sort_keys=True, separators=(",", ":"))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload)
    return artifact


def load_model(path) -> ModelArtifact:
    """Read an artifact; raises VersionMismatch or CorruptArtifact."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptArtifact(f"cannot read artifact {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptArtifact(f"artifact {path} is not a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"artifact {path} has format_version {version}, expected {FORMAT_VERSION}"
        )
    try:
        config = ModelConfig.from_dict(doc["config"])
        model = _TYPE_OF_FAMILY[config.family].from_dict(doc["parameters"])
        norm = NormParams.from_dict(doc["norm"])
        fingerprint = dict(doc["training_fingerprint"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptArtifact(f"artifact {path} is malformed: {exc}") from exc
    return ModelArtifact(config=config, model=model, norm=norm, fingerprint=fingerprint)
