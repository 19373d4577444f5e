"""Search for a tensor that satisfies duality while staying far from Osserman.

The search minimizes the penalized objective

    duality_residual + mu * max(0, delta - osserman_spread)

over unit-Frobenius curvature tensors.  Every move stays inside the
curvature subspace.  Scores are always produced by the public checkers on
a fixed inner sample, so a reported candidate can be re-scored exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import cma
import numpy as np

from ..generators import random_curvature
from ..tensor_core import AlgebraicCurvatureTensor, curvature_basis, project_array
from ..spectral import duality_report, osserman_report, sample_unit_sphere

logger = logging.getLogger(__name__)

METHODS = ("random-restart", "coordinate-descent")
INNER_SAMPLES = 32
VERIFY_SAMPLES = 500
MU0 = 10.0


@dataclass
class FalsifierResult:
    n: int
    delta: float
    method: str
    seed: int
    best_residual: float
    best_spread: float
    objective: float
    feasible: bool
    candidate: AlgebraicCurvatureTensor
    evaluations: int
    restarts: int
    final_mu: float
    sample_size: int
    sample_seed: int
    probes_per_eigenspace: int
    trace: List[Tuple[int, float, float]] = field(default_factory=list)
    verified: Optional[dict] = None

    def rescore(self) -> Tuple[float, float]:
        """(duality residual, Osserman spread) of the candidate on the inner sample."""
        sample = sample_unit_sphere(self.n, self.sample_size, self.sample_seed)
        return _score(self.candidate, sample, self.probes_per_eigenspace)


def _score(t: AlgebraicCurvatureTensor, sample, probes: int) -> Tuple[float, float]:
    d = duality_report(t, sample, probes_per_eigenspace=probes)
    o = osserman_report(t, sample)
    return d.max_residual, o.profile_spread


def _unit(comps: np.ndarray) -> np.ndarray:
    return comps / np.linalg.norm(comps.ravel())


class _Search:
    """Book-keeping shared by both methods: budget, incumbent, best feasible point."""

    def __init__(self, n, delta, budget, sample, probes):
        self.n, self.delta, self.budget = n, delta, budget
        self.sample, self.probes = sample, probes
        self.evals = 0
        self.mu = MU0
        self.best = None        # (residual, spread, comps) over feasible points
        self.best_any = None    # (objective at final mu is recomputed later)
        self.trace: List[Tuple[int, float, float]] = []

    @property
    def exhausted(self) -> bool:
        return self.evals >= self.budget

    def penalty(self, residual, spread) -> float:
        return residual + self.mu * max(0.0, self.delta - spread)

    def evaluate(self, comps: np.ndarray) -> Tuple[float, float, float]:
        t = AlgebraicCurvatureTensor(self.n, comps)
        residual, spread = _score(t, self.sample, self.probes)
        self.evals += 1
        if spread >= self.delta and (self.best is None or residual < self.best[0]):
            self.best = (residual, spread, comps)
            self.trace.append((self.evals, residual, spread))
        violation = max(0.0, self.delta - spread)
        key = (violation, residual)
        if self.best_any is None or key < self.best_any[0]:
            self.best_any = (key, residual, spread, comps)
        return residual, spread, self.penalty(residual, spread)

    def end_restart(self, spread: float):
        if spread < self.delta:
            self.mu *= 10.0


def _random_restart(search: _Search, rng, restart_budget: Optional[int], sigma0: float = 0.3) -> int:
    """Restarted CMA-ES in coordinates of an orthonormal basis of the curvature subspace."""
    basis = curvature_basis(search.n)
    flat = basis.reshape(len(basis), -1)
    shape = basis.shape[1:]

    def to_tensor(c):
        return _unit(np.asarray(c) @ flat).reshape(shape)

    restarts = 0
    while not search.exhausted:
        restarts += 1
        x0 = random_curvature(search.n, rng.integers(2 ** 63)).components.ravel() @ flat.T
        es = cma.CMAEvolutionStrategy(x0, sigma0, {
            "seed": int(rng.integers(1, 2 ** 31)),
            "verbose": -9,
            "tolfun": 0, "tolfunhist": 0, "tolflatfitness": 10 ** 9,
            "tolx": 1e-15,
        })
        stop = search.budget if restart_budget is None else min(search.budget, search.evals + restart_budget)
        s_inc, f_inc = 0.0, np.inf
        while search.evals < stop and not es.stop():
            xs = es.ask()
            fs = []
            for c in xs:
                if search.evals >= stop:
                    break
                r, s_, f = search.evaluate(to_tensor(c))
                fs.append(f)
                if f < f_inc:
                    s_inc, f_inc = s_, f
            if len(fs) < len(xs):
                break
            es.tell(xs, fs)
        search.end_restart(s_inc)
    return restarts


def _coordinate_descent(search: _Search, rng, step0: float = 0.1, min_step: float = 1e-10) -> int:
    basis = curvature_basis(search.n)
    restarts = 0
    while not search.exhausted:
        restarts += 1
        x = random_curvature(search.n, rng.integers(2 ** 63)).components
        r, s, f = search.evaluate(x)
        step = step0
        while not search.exhausted and step > min_step:
            improved = False
            for i in rng.permutation(len(basis)):
                for sign in (1.0, -1.0):
                    if search.exhausted:
                        break
                    y = _unit(x + sign * step * basis[i])
                    ry, sy, fy = search.evaluate(y)
                    if fy < f:
                        x, r, s, f = y, ry, sy, fy
                        improved = True
                        break
            if not improved:
                step *= 0.5
        search.end_restart(s)
    return restarts


def falsification_search(n: int, delta: float, budget: int, seed: int,
                         method: str = "random-restart",
                         samples: int = INNER_SAMPLES,
                         probes_per_eigenspace: int = 4,
                         restart_budget: Optional[int] = None,
                         tolerance: float = 1e-6,
                         verify_samples: int = VERIFY_SAMPLES) -> FalsifierResult:
    """Look for duality without the Osserman property in dimension ``n``.

    The best point is the lowest-residual candidate whose spread is at
    least ``delta``; when no evaluated point is feasible, the least
    violating one.  Candidates scoring below ``10 * tolerance`` are
    re-checked on a ``verify_samples`` sphere sample.
    """
    if not 3 <= n <= 6:
        raise ValueError("n must lie in [3, 6]")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    seq = np.random.SeedSequence(seed)
    sample_seed = int(seq.generate_state(1)[0])
    rng = np.random.default_rng(seq.spawn(1)[0])
    sample = sample_unit_sphere(n, samples, sample_seed)
    search = _Search(n, delta, budget, sample, probes_per_eigenspace)
    if method == "random-restart":
        restarts = _random_restart(search, rng, restart_budget)
    else:
        restarts = _coordinate_descent(search, rng)

    if search.best is not None:
        residual, spread, comps = search.best
        feasible = True
    else:
        _, residual, spread, comps = search.best_any
        feasible = False
    candidate = AlgebraicCurvatureTensor(n, comps)
    result = FalsifierResult(
        n=n, delta=delta, method=method, seed=seed,
        best_residual=residual, best_spread=spread,
        objective=search.penalty(residual, spread), feasible=feasible,
        candidate=candidate, evaluations=search.evals, restarts=restarts,
        final_mu=search.mu, sample_size=samples, sample_seed=sample_seed,
        probes_per_eigenspace=probes_per_eigenspace, trace=search.trace,
    )
    if residual < 10 * tolerance:
        vsample = sample_unit_sphere(n, verify_samples, sample_seed + 1)
        vres, vspread = _score(candidate, vsample, probes_per_eigenspace)
        result.verified = {"samples": verify_samples, "seed": sample_seed + 1,
                           "max_residual": vres, "spread": vspread}
        logger.info("re-verified candidate: residual %.3e spread %.3e", vres, vspread)
    return result
