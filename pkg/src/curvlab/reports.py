"""JSON and CSV serialization of checker reports.

JSON reports share the layout::

    {"check": "osserman" | "duality" | "derivative", "tensor": <source>,
     "samples": K, "seed": s, "spread" | "max_residual" | "max_error": x,
     "verdict": bool, "witness": {...}}

CSV output has one row per sample point (osserman), per probe (duality)
or per branch (derivative).
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Dict, List, Sequence

import numpy as np

from .spectral import BranchDerivative, DualityReport, OssermanReport


def _vec(v) -> List[float]:
    return [float(x) for x in np.asarray(v).ravel()]


def osserman_to_dict(rep: OssermanReport, tensor: Any = None) -> Dict[str, Any]:
    i, j = rep.witness_indices
    return {
        "check": "osserman",
        "tensor": tensor,
        "samples": rep.samples,
        "seed": rep.seed,
        "spread": rep.profile_spread,
        "coeff_spread": rep.coeff_spread,
        "tolerance": rep.tolerance,
        "verdict": rep.verdict,
        "regular_fraction": float(np.mean(rep.regular_flags)) if len(rep.regular_flags) else 1.0,
        "witness": {
            "indices": [i, j],
            "x1": _vec(rep.witness[0]),
            "x2": _vec(rep.witness[1]),
            "spectrum1": _vec(rep.spectra[i]),
            "spectrum2": _vec(rep.spectra[j]),
        },
    }


def duality_to_dict(rep: DualityReport, tensor: Any = None) -> Dict[str, Any]:
    w = rep.witness
    witness = None if w is None else {
        "base_index": w.base_index,
        "base": _vec(w.base),
        "eigenvalue": w.eigenvalue,
        "eigenvector": _vec(w.eigenvector),
        "residual": w.residual,
    }
    return {
        "check": "duality",
        "tensor": tensor,
        "samples": rep.samples,
        "seed": rep.seed,
        "max_residual": rep.max_residual,
        "tolerance": rep.tolerance,
        "verdict": rep.verdict,
        "records": len(rep),
        "witness": witness,
    }


def derivative_to_dict(branches: Sequence[BranchDerivative], tensor: Any = None,
                       seed=None, rejected: int = 0) -> Dict[str, Any]:
    errors = [b.error for b in branches]
    worst = int(np.argmax(errors)) if errors else None
    return {
        "check": "derivative",
        "tensor": tensor,
        "samples": len(branches) + rejected,
        "seed": seed,
        "max_error": max(errors) if errors else 0.0,
        "rejected": rejected,
        "verdict": all(b.ok for b in branches),
        "witness": None if worst is None else _branch_dict(branches[worst]),
    }


def _branch_dict(b: BranchDerivative) -> Dict[str, Any]:
    return {
        "base": _vec(b.base),
        "direction": _vec(b.direction),
        "eigenvalue": b.eigenvalue,
        "step": b.step,
        "fd_value": b.fd_value,
        "analytic_value": b.analytic_value,
        "error": b.error,
        "tolerance": b.tolerance,
    }


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def osserman_csv(rep: OssermanReport, points: np.ndarray) -> str:
    n = rep.spectra.shape[1]
    header = ["index", *(f"x{a}" for a in range(n)), *(f"eig{a}" for a in range(n)), "regular"]
    rows = ([p, *map(repr, _vec(points[p])), *map(repr, _vec(rep.spectra[p])), int(rep.regular_flags[p])]
            for p in range(rep.samples))
    return _csv_text(header, rows)


def duality_csv(rep: DualityReport) -> str:
    n = rep.points.shape[1]
    header = ["base_index", "eigenvalue", "residual", *(f"y{a}" for a in range(n))]
    rows = ([int(rep.base_indices[i]), repr(float(rep.eigenvalues[i])), repr(float(rep.residuals[i])),
             *map(repr, _vec(rep.eigenvectors[i]))] for i in range(len(rep)))
    return _csv_text(header, rows)


def derivative_csv(branches: Sequence[BranchDerivative]) -> str:
    header = ["eigenvalue", "step", "fd_value", "analytic_value", "error", "tolerance"]
    rows = ([repr(b.eigenvalue), repr(b.step), repr(b.fd_value), repr(b.analytic_value),
             repr(b.error), repr(b.tolerance)] for b in branches)
    return _csv_text(header, rows)
