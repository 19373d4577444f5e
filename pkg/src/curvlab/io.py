"""JSON tensor files.

Dense files list all n**4 components in row-major (i, j, k, l) order::

    {"n": 3, "format": "dense-rowmajor-ijkl", "components": [...]}

Sparse files list nonzero entries only::

    {"n": 3, "format": "sparse-ijkl", "entries": [[i, j, k, l, value], ...]}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict

import numpy as np

from .tensor_core import AlgebraicCurvatureTensor, from_dense, project_to_curvature

DENSE = "dense-rowmajor-ijkl"
SPARSE = "sparse-ijkl"


def tensor_to_dict(t: AlgebraicCurvatureTensor) -> Dict[str, Any]:
    return {"n": t.n, "format": DENSE, "components": [float(c) for c in t.components.ravel()]}


def tensor_from_dict(obj: Dict[str, Any], project: bool = False) -> AlgebraicCurvatureTensor:
    """Parse a tensor document; symmetry violations raise unless ``project`` is set."""
    try:
        n = obj["n"]
        fmt = obj.get("format", DENSE)
    except (TypeError, KeyError) as exc:
        raise ValueError("tensor document needs an 'n' field") from exc
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"'n' must be an integer >= 2, got {n!r}")
    if fmt == DENSE:
        data = np.asarray(obj["components"], dtype=float)
        if data.size != n ** 4:
            raise ValueError(f"expected {n ** 4} components for n={n}, got {data.size}")
    elif fmt == SPARSE:
        data = np.zeros((n,) * 4)
        for entry in obj["entries"]:
            if len(entry) != 5:
                raise ValueError(f"sparse entry must be [i, j, k, l, value], got {entry!r}")
            *idx, value = entry
            if any(not isinstance(i, int) or not 0 <= i < n for i in idx):
                raise ValueError(f"sparse index out of range: {idx}")
            data[tuple(idx)] = float(value)
    else:
        raise ValueError(f"unknown tensor format {fmt!r}")
    if project:
        if not np.all(np.isfinite(data)):
            raise ValueError("non-finite component")
        return project_to_curvature(data.reshape((n,) * 4))
    return from_dense(n, data)


def save_tensor(t: AlgebraicCurvatureTensor, path) -> None:
    Path(path).write_text(json.dumps(tensor_to_dict(t)) + "\n", encoding="utf-8")


def load_tensor(path, project: bool = False) -> AlgebraicCurvatureTensor:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return tensor_from_dict(obj, project=project)
