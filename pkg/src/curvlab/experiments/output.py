"""Serialization of experiment results.

Equivalence CSV columns, in order: ``tensor_id, osserman_spread,
duality_max_residual, osserman_verdict, duality_verdict, agree``.
Falsifier CSV rows are the improvement trace: ``evaluation, residual,
spread``.  Floats are written with ``repr`` so output is bit-stable.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Sequence, Union

from ..io import tensor_to_dict
from ..reports import _csv_text, dumps_json
from .equivalence import EquivalenceRow, agreement_rate
from .falsify import FalsifierResult

EQUIVALENCE_COLUMNS = ("tensor_id", "osserman_spread", "duality_max_residual",
                       "osserman_verdict", "duality_verdict", "agree")


def _flag(v) -> str:
    return "" if v is None else str(bool(v)).lower()


def row_to_dict(row: EquivalenceRow) -> Dict[str, Any]:
    d = {
        "tensor_id": row.tensor_id,
        "osserman_spread": row.osserman_spread,
        "duality_max_residual": row.duality_max_residual,
        "osserman_verdict": row.osserman_verdict,
        "duality_verdict": row.duality_verdict,
        "agree": row.agree,
    }
    if row.error:
        d["error"] = row.error
    return d


def falsifier_to_dict(res: FalsifierResult) -> Dict[str, Any]:
    return {
        "check": "falsify",
        "n": res.n,
        "delta": res.delta,
        "method": res.method,
        "seed": res.seed,
        "evaluations": res.evaluations,
        "restarts": res.restarts,
        "final_mu": res.final_mu,
        "samples": res.sample_size,
        "sample_seed": res.sample_seed,
        "best_residual": res.best_residual,
        "best_spread": res.best_spread,
        "objective": res.objective,
        "feasible": res.feasible,
        "verified": res.verified,
        "trace": [list(t) for t in res.trace],
        "candidate": tensor_to_dict(res.candidate),
    }


def render(obj, fmt: str = "json") -> str:
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(obj, FalsifierResult):
        if fmt == "json":
            return dumps_json(falsifier_to_dict(obj))
        return _csv_text(("evaluation", "residual", "spread"),
                         ([e, repr(r), repr(s)] for e, r, s in obj.trace))
    rows = list(obj)
    if fmt == "json":
        return dumps_json({
            "check": "equivalence",
            "rows": [row_to_dict(r) for r in rows],
            "agreement_rate": agreement_rate(rows),
        })
    return _csv_text(EQUIVALENCE_COLUMNS, (
        [r.tensor_id, repr(r.osserman_spread), repr(r.duality_max_residual),
         _flag(r.osserman_verdict), _flag(r.duality_verdict), _flag(r.agree)] for r in rows))


def write_report(obj: Union[Sequence[EquivalenceRow], FalsifierResult], path, fmt: str = "json") -> None:
    """Write equivalence rows or a falsifier result as JSON or CSV."""
    Path(path).write_text(render(obj, fmt), encoding="utf-8")
