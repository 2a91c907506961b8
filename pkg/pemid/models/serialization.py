"""Versioned YAML model files."""

from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import yaml
from packaging import version

from pemid.core.exceptions import ModelFileError, ModelFormatVersionError
from pemid.core.files import atomic_write_text
from pemid.models.structure import ModelStructure, StateSpaceModel

MODEL_FORMAT = "pemid-model"
MODEL_FORMAT_VERSION = "1.0"


def model_to_dict(
    model: StateSpaceModel, metadata: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    return {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "structure": model.structure.model_dump(mode="json"),
        "parameters": {
            name: {"shape": list(leaf.shape), "values": leaf.reshape(-1).tolist()}
            for name, leaf in model.leaves.items()
        },
        "metadata": metadata or {},
    }


def model_from_dict(
    data: Dict[str, Any], source: str = "<memory>"
) -> Tuple[StateSpaceModel, Dict[str, Any]]:
    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise ModelFileError(f"{source} is not a {MODEL_FORMAT} file")

    found = str(data.get("format_version", ""))
    try:
        parsed = version.parse(found)
    except version.InvalidVersion as e:
        raise ModelFormatVersionError(source, "1.x", found) from e
    if parsed.major != version.parse(MODEL_FORMAT_VERSION).major:
        raise ModelFormatVersionError(source, "1.x", found)

    try:
        structure = ModelStructure(**data["structure"])
        leaves = {
            name: np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in data["parameters"].items()
        }
        model = StateSpaceModel.from_leaves(structure, leaves)
    except ModelFileError:
        raise
    except Exception as e:
        raise ModelFileError(f"Invalid model file {source}: {e}") from e
    return model, data.get("metadata") or {}


def save_model(
    model: StateSpaceModel,
    path: Union[str, Path],
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a model file atomically (temp file + rename)."""
    text = yaml.safe_dump(model_to_dict(model, metadata), sort_keys=False, default_flow_style=None)
    try:
        return atomic_write_text(path, text)
    except OSError as e:
        raise ModelFileError(f"Cannot write model file {path}: {e}") from e


def load_model(path: Union[str, Path]) -> Tuple[StateSpaceModel, Dict[str, Any]]:
    """Read a model file; returns the model and its metadata block."""
    path = Path(path)
    if not path.is_file():
        raise ModelFileError(f"Model file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ModelFileError(f"Error parsing model file {path}: {e}") from e
    return model_from_dict(data, str(path))
