"""Acceptance criteria, one test per criterion.

Each test logs a single PASS/FAIL line (collected in the terminal summary)
before asserting, so a red criterion still reports its measured numbers.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from curvlab.experiments import equivalence_experiment, falsification_search
from curvlab.experiments.output import falsifier_to_dict
from curvlab.generators import (
    CliffordSystem,
    CorpusSpec,
    TensorDescriptor,
    clifford_osserman,
    complex_space_form,
    constant_curvature,
    make_clifford_structures,
    perturb,
    random_curvature,
    single_plane,
)
from curvlab.spectral import (
    BranchCrossingError,
    SphereSample,
    branch_derivative,
    degenerate_branch_matrix,
    duality_report,
    osserman_report,
    random_frame,
    sample_unit_sphere,
    spectral_profile,
)
from curvlab.tensor_core import jacobi_form, jacobi_operator, project_array, validate_symmetries

REPORT_DIR = Path(__file__).resolve().parent.parent / "reports"

OSSERMAN_CORPUS = (
    [{"kind": "constant", "n": n, "params": {"lambda": lam}} for n in range(3, 9) for lam in (1.0, -0.5)]
    + [{"kind": "complex", "n": n, "params": {"lambda0": l0, "lambda1": l1}, "seed": s}
       for n in (4, 6, 8) for s, (l0, l1) in enumerate([(1, 1), (0.5, -1), (-1, 2)])]
    + [{"kind": "clifford", "n": n, "params": {"m": m, "lambda0": 0.7, "lambdas": list(np.linspace(0.4, 1.6, m))},
        "seed": s}
       for n, m in [(4, 2), (4, 3), (8, 1), (8, 2), (8, 3), (12, 3), (16, 3)] for s in (0, 1)]
)


def osserman_corpus():
    return [(d["kind"] + str(d["n"]), TensorDescriptor.from_dict(d).build()) for d in OSSERMAN_CORPUS]


def symmetry_suite_tensor(seed, k):
    kinds = ("constant", "complex", "clifford", "random", "perturbed", "single_plane")
    kind = kinds[k % len(kinds)]
    n = 2 + (10 * seed + k) % 7
    even = n + n % 2
    if kind == "constant":
        return constant_curvature(n, np.random.default_rng(seed).uniform(-3, 3))
    if kind == "complex":
        return complex_space_form(even, 1.0, 0.5 + k, seed=seed)
    if kind == "clifford":
        m = 3 if even in (4, 8) else 1
        Js = tuple(make_clifford_structures(even, m, seed))
        return clifford_osserman(CliffordSystem(even, Js, 0.3, tuple(0.5 + np.arange(m))))
    if kind == "random":
        return random_curvature(n, 1000 * seed + k, 1.0 + k)
    if kind == "perturbed":
        return perturb(constant_curvature(n, 1.0), random_curvature(n, 7919 * seed + k), 0.1)
    return single_plane(max(n, 2), 1.0 + seed)


def test_criterion_1_symmetry_suite(acceptance_log):
    start = time.perf_counter()
    worst_sym = worst_idem = worst_orth = 0.0
    count = 0
    for seed in range(100):
        for k in range(10):
            t = symmetry_suite_tensor(seed, k)
            worst_sym = max(worst_sym, max(v for _, v in validate_symmetries(t)) / max(1.0, np.abs(t.components).max()))
            raw = np.random.default_rng([seed, k]).standard_normal((t.n,) * 4)
            P = project_array(raw)
            worst_idem = max(worst_idem, np.abs(project_array(P) - P).max())
            worst_orth = max(worst_orth, abs(np.vdot(raw - P, P)), abs(np.vdot(raw - P, t.components)))
            count += 1
    elapsed = time.perf_counter() - start
    ok = count == 1000 and worst_sym <= 1e-12 and worst_idem <= 1e-10 and worst_orth <= 1e-10 and elapsed < 30
    acceptance_log("1 symmetry suite", ok,
                   f"{count} tensors, symmetry {worst_sym:.1e}, idempotence {worst_idem:.1e}, "
                   f"orthogonality {worst_orth:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_known_spectra(acceptance_log):
    start = time.perf_counter()
    exact = True
    for n in range(2, 9):
        for lam in (1.0, -2.0, 0.25):
            t = constant_curvature(n, lam)
            for X in np.eye(n):
                exact &= np.array_equal(np.sort(np.linalg.eigvalsh(jacobi_operator(t, X).matrix)),
                                        np.sort([0.0] + [lam] * (n - 1)))
            for X in sample_unit_sphere(n, 20, n).points:
                p = spectral_profile(jacobi_operator(t, X))
                exact &= p.multiplicities == ((n - 1, 1) if lam < 0 else (1, n - 1))
                exact &= bool(np.allclose(sorted(p.eigenvalues), sorted([0.0, lam]), rtol=0, atol=1e-12))
    cx = osserman_report(complex_space_form(4, 1, 1, seed=0), sample_unit_sphere(4, 500, 0))
    cx_ok = cx.profile_spread <= 1e-9 and np.allclose(cx.spectra[0], [0, 1, 1, 4], atol=1e-9)
    Js = tuple(make_clifford_structures(8, 3, seed=0))
    q = osserman_report(clifford_osserman(CliffordSystem(8, Js, 1.0, (1.0, 1.0, 1.0))), sample_unit_sphere(8, 500, 0))
    q_ok = q.profile_spread <= 1e-9 and np.allclose(q.spectra[0], [0, 1, 1, 1, 1, 4, 4, 4], atol=1e-9)
    elapsed = time.perf_counter() - start
    ok = bool(exact) and cx_ok and q_ok and elapsed < 60
    acceptance_log("2 known spectra", ok,
                   f"constant exact={bool(exact)}, complex spread {cx.profile_spread:.1e}, "
                   f"quaternionic spread {q.profile_spread:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_3_osserman_implies_duality(acceptance_log):
    worst, worst_id = 0.0, None
    for ident, t in osserman_corpus():
        rep = duality_report(t, sample_unit_sphere(t.n, 200, 0), probes_per_eigenspace=4)
        if rep.max_residual >= worst:
            worst, worst_id = rep.max_residual, ident
    ok = worst <= 1e-8
    acceptance_log("3 Osserman => duality", ok,
                   f"{len(OSSERMAN_CORPUS)} tensors, max residual {worst:.1e} ({worst_id})")
    assert ok


def test_criterion_4_vanishing_branch_slopes(acceptance_log):
    rng = np.random.default_rng(4)
    worst_simple = worst_degen = 0.0
    n_simple = n_degen = 0
    for _, t in osserman_corpus():
        for _ in range(100):
            X, Y = random_frame(t.n, rng)
            p = spectral_profile(jacobi_operator(t, X))
            for c, mult in enumerate(p.multiplicities):
                basis = p.cluster_basis(c)
                if mult == 1:
                    e0 = basis[:, 0]
                    worst_simple = max(worst_simple, abs(2 * jacobi_form(t, X, Y, e0, e0)))
                    n_simple += 1
                else:
                    w = np.linalg.eigvalsh(degenerate_branch_matrix(t, X, Y, basis))
                    worst_degen = max(worst_degen, np.abs(w).max())
                    n_degen += 1
    ok = worst_simple <= 1e-8 and worst_degen <= 1e-8
    acceptance_log("4 vanishing first variation", ok,
                   f"{n_simple} simple branches max {worst_simple:.1e}, "
                   f"{n_degen} clusters max {worst_degen:.1e}")
    assert ok


def test_criterion_5_derivative_identity(acceptance_log):
    rng = np.random.default_rng(5)
    trials = failures = rejected = 0
    worst_ratio = 0.0
    for i in range(50):
        n = (3, 4, 5)[i % 3]
        t = random_curvature(n, 500 + i, scale=rng.uniform(0.5, 2.0))
        X, Y = random_frame(n, rng)
        which = int(rng.integers(n))
        for h in (1e-3, 1e-4):
            trials += 1
            try:
                b = branch_derivative(t, X, Y, which, h=h)
            except BranchCrossingError:
                rejected += 1
                continue
            worst_ratio = max(worst_ratio, b.error / b.tolerance)
            failures += not b.ok
    ok = failures == 0 and rejected < 0.05 * trials
    acceptance_log("5 derivative identity", ok,
                   f"{trials} trials, {failures} failures, {rejected} rejected, "
                   f"worst error/bound {worst_ratio:.1e}")
    assert ok


def test_criterion_6_negative_control(acceptance_log):
    t = single_plane(3)
    spread = osserman_report(t, sample_unit_sphere(3, 200, 0)).profile_spread
    witness = np.array([1.0, 0.0, 1.0]) / np.sqrt(2)
    residual = duality_report(t, SphereSample.from_points([witness])).max_residual
    ok = spread >= 0.5 and 0.45 <= residual <= 0.55
    acceptance_log("6 negative control", ok, f"spread {spread:.4f}, witness residual {residual:.6f}")
    assert ok


def equivalence_bases():
    bases = [{"kind": "constant", "n": n, "params": {"lambda": lam}} for n in range(3, 9) for lam in (1.0, -1.0)]
    bases += [{"kind": "complex", "n": n, "params": {"lambda0": 1, "lambda1": l1}, "seed": s}
              for n in (4, 6, 8) for s, l1 in enumerate((1.0, -0.5, 2.0, 0.5, -1.5))]
    bases += [{"kind": "clifford", "n": n, "params": {"m": m, "lambda0": 1.0, "lambdas": [1.0] * m}, "seed": s}
              for n, m in [(4, 2), (4, 3), (8, 2), (8, 3), (12, 3)] for s in range(3)]
    bases += [{"kind": "clifford", "n": 8, "params": {"m": 1, "lambda0": 0.5, "lambdas": [2.0]}, "seed": s}
              for s in range(8)]
    return bases


def test_criterion_7_equivalence(acceptance_log):
    bases = equivalence_bases()
    assert len(bases) == 50
    spec = CorpusSpec.from_json_obj({"tensors": bases, "epsilons": [0.0, 0.1]})
    start = time.perf_counter()
    rows = equivalence_experiment(spec, samples=200, seed=0)
    elapsed = time.perf_counter() - start
    clean, noisy = rows[0::2], rows[1::2]
    agree = sum(r.agree for r in rows) / len(rows)
    clean_max = max(max(r.osserman_spread, r.duality_max_residual) for r in clean)
    noisy_min = min(min(r.osserman_spread, r.duality_max_residual) for r in noisy)
    ok = (len(rows) == 100 and agree == 1.0 and clean_max <= 1e-8 and noisy_min >= 1e-3
          and all(r.osserman_verdict for r in clean) and not any(r.osserman_verdict for r in noisy)
          and elapsed < 300)
    acceptance_log("7 equivalence experiment", ok,
                   f"{len(rows)} rows, agreement {agree:.0%}, eps=0 max {clean_max:.1e}, "
                   f"eps=0.1 min {noisy_min:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_8_falsifier(acceptance_log):
    start = time.perf_counter()
    results = [falsification_search(4, 0.1, 10_000, seed=s) for s in range(5)]
    elapsed = time.perf_counter() - start
    floors = [r.best_residual for r in results]
    REPORT_DIR.mkdir(exist_ok=True)
    summary = [{k: v for k, v in falsifier_to_dict(r).items() if k not in ("candidate", "trace")} for r in results]
    (REPORT_DIR / "falsifier_floors.json").write_text(json.dumps(summary, indent=2) + "\n")
    ok = all(f > 1e-6 for f in floors) and elapsed < 600
    acceptance_log("8 falsifier", ok,
                   "floors " + ", ".join(f"{f:.3e}" for f in floors)
                   + f", spreads " + ", ".join(f"{r.best_spread:.3f}" for r in results) + f", {elapsed:.1f}s")
    assert ok
