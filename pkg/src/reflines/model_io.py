"""Versioned text model files.

A model file is a UTF-8 JSON object with lexicographically sorted keys::

    {
     "config": {...},            # full FeatureConfig, gazetteers inlined
     "constraints_default": true,
     "format_version": 1,
     "labels": ["B-REF", "I-REF", "O-REF", "O"],
     "metadata": {...},
     "n_weights": 1234,
     "order": 2,
     "weights": {
      "bias~B-REF": -0.12345678901234567,
      ...
     }
    }

Weights are written with 17 significant digits so that every double
round-trips exactly. Saving the same model twice gives identical bytes.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .corpus import LABELS
from .crf import MAX_ORDER, CrfModel
from .features import FeatureConfig, FeatureSpace

__all__ = ["FORMAT_VERSION", "ModelFormatError", "dumps", "loads", "save", "load"]

FORMAT_VERSION = 1
_REQUIRED = ("format_version", "order", "labels", "config", "weights", "n_weights")


class ModelFormatError(ValueError):
    pass


def _number(x: float) -> str:
    if not math.isfinite(x):
        raise ModelFormatError(f"non-finite weight {x!r}")
    text = f"{x:.17g}"
    return text if any(c in text for c in ".eE") else text + ".0"


def _canonical(obj, indent: int = 1) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=indent, allow_nan=False)


def dumps(model: CrfModel) -> str:
    header = {
        "config": model.config.to_json(),
        "constraints_default": bool(model.constraints_default),
        "format_version": FORMAT_VERSION,
        "labels": [lab.tag for lab in LABELS],
        "metadata": _clean_metadata(model.metadata),
        "n_weights": int(model.weights.size),
        "order": model.order,
    }
    pairs = sorted(zip(model.parameter_names, model.weights.tolist()))
    body = ",\n".join(f"  {json.dumps(name, ensure_ascii=False)}: {_number(w)}" for name, w in pairs)
    text = _canonical(header)
    # splice the weights object in as the last key ("weights" sorts last)
    return text[:-2] + ',\n "weights": {\n' + body + "\n }\n}\n"


def _clean_metadata(meta: dict) -> dict:
    out = {}
    for key, value in meta.items():
        if isinstance(value, float) and not math.isfinite(value):
            value = None
        out[key] = value
    return out


def save(model: CrfModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def loads(text: str) -> CrfModel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ModelFormatError("model file must contain a JSON object")
    if "format_version" in obj and obj["format_version"] != FORMAT_VERSION:
        raise ModelFormatError(f"unknown version {obj['format_version']!r} (supported: {FORMAT_VERSION})")
    missing = [key for key in _REQUIRED if key not in obj]
    if missing:
        raise ModelFormatError(f"missing field(s): {', '.join(missing)}")
    if obj["labels"] != [lab.tag for lab in LABELS]:
        raise ModelFormatError(f"unexpected label list {obj['labels']!r}")
    order = obj["order"]
    if not isinstance(order, int) or not 1 <= order <= MAX_ORDER:
        raise ModelFormatError(f"invalid Markov order {order!r}")
    try:
        config = FeatureConfig.from_json(obj["config"])
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid feature config: {exc}") from None

    weights = obj["weights"]
    if not isinstance(weights, dict):
        raise ModelFormatError("'weights' must be an object mapping names to numbers")
    features = sorted({name.rsplit("~", 1)[0] for name in weights if "~" in name})
    space = FeatureSpace(features, frozen=True)
    model = CrfModel.zeros(order, space, config)
    expected = model.parameter_names
    missing_keys = [name for name in expected if name not in weights]
    extra_keys = sorted(set(weights) - set(expected))
    if missing_keys or extra_keys or len(weights) != obj["n_weights"] or len(expected) != obj["n_weights"]:
        detail = []
        if missing_keys:
            detail.append("missing " + ", ".join(repr(k) for k in missing_keys[:5]))
        if extra_keys:
            detail.append("unexpected " + ", ".join(repr(k) for k in extra_keys[:5]))
        detail.append(f"file declares {obj['n_weights']}, found {len(weights)}")
        raise ModelFormatError("weight count mismatch: " + "; ".join(detail))
    values = np.array([float(weights[name]) for name in expected])
    return CrfModel(order, space, values, config, bool(obj.get("constraints_default", True)),
                    dict(obj.get("metadata") or {}))


def load(path: str | os.PathLike) -> CrfModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
