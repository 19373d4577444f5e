"""Run the Osserman and duality checks side by side over a corpus."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

from ..generators import CorpusSpec, TensorDescriptor
from ..spectral import DEFAULT_TOLERANCE, duality_report, osserman_report, sample_unit_sphere

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EquivalenceRow:
    tensor_id: str
    osserman_spread: float
    duality_max_residual: float
    osserman_verdict: Optional[bool]
    duality_verdict: Optional[bool]
    error: Optional[str] = None

    @property
    def agree(self) -> bool:
        return self.error is None and self.osserman_verdict == self.duality_verdict


def _run_row(desc: TensorDescriptor, samples: int, seed, cluster_tol,
             osserman_tolerance: float, duality_tolerance: float, probes: int) -> EquivalenceRow:
    ident = desc.ident
    try:
        t = desc.build()
        sample = sample_unit_sphere(t.n, samples, seed)
        o = osserman_report(t, sample, cluster_tol, osserman_tolerance)
        d = duality_report(t, sample, cluster_tol, duality_tolerance, probes)
    except Exception as exc:  # row is marked, the run continues
        logger.warning("row %s failed: %s", ident, exc)
        return EquivalenceRow(ident, float("nan"), float("nan"), None, None, f"{type(exc).__name__}: {exc}")
    return EquivalenceRow(ident, o.profile_spread, d.max_residual, o.verdict, d.verdict)


def equivalence_experiment(corpus, samples: int = 200, seed: int = 0,
                           cluster_tol: Optional[float] = None,
                           osserman_tolerance: float = DEFAULT_TOLERANCE,
                           duality_tolerance: float = DEFAULT_TOLERANCE,
                           probes_per_eigenspace: int = 4,
                           threads: int = 1) -> List[EquivalenceRow]:
    """One row per corpus tensor; both checks see the same sphere sample.

    ``corpus`` is a :class:`CorpusSpec` or a sequence of descriptors.
    Rows come back in corpus order whatever the thread count.
    """
    if isinstance(corpus, CorpusSpec):
        descs = corpus.expanded()
    else:
        descs = [d if isinstance(d, TensorDescriptor) else TensorDescriptor.from_dict(d) for d in corpus]
    args = (samples, seed, cluster_tol, osserman_tolerance, duality_tolerance, probes_per_eigenspace)
    if threads > 1 and len(descs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda d: _run_row(d, *args), descs))
    return [_run_row(d, *args) for d in descs]


def agreement_rate(rows: Sequence[EquivalenceRow]) -> float:
    if not rows:
        return 1.0
    return sum(r.agree for r in rows) / len(rows)
