"""Spectral analysis of Jacobi operators over the unit sphere.

Three checks live here: the Osserman check (is the Jacobi spectrum the
same at every sampled direction?), the duality check (if Y is a unit
eigenvector of R_X with eigenvalue lam, is X an eigenvector of R_Y with
the same eigenvalue?) and the first-order behaviour of eigenvalue
branches along great circles ``cos(phi) X + sin(phi) Y``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .tensor_core import AlgebraicCurvatureTensor, JacobiOperator, jacobi_matrices

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8
CLUSTER_REL_TOL = 1e-6
CLUSTER_ABS_FLOOR = 1e-12
REGULAR_GAP_FACTOR = 10.0
DEFAULT_STEP = 1e-4


class EigensolverError(RuntimeError):
    pass


class BranchError(ValueError):
    pass


class DegenerateBranchError(BranchError):
    """The selected eigenvalue cluster is not simple."""


class BranchCrossingError(BranchError):
    """Eigenvector continuation lost within [-h, h] or the base point is not regular."""


def _eigh(M: np.ndarray):
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"symmetric eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise EigensolverError("symmetric eigensolver returned non-finite eigenvalues")
    return w, V


def default_cluster_tol(eigenvalues: np.ndarray) -> float:
    """``1e-6`` times the spectral range, floored at ``1e-12``."""
    span = float(eigenvalues[-1] - eigenvalues[0]) if len(eigenvalues) else 0.0
    return max(CLUSTER_REL_TOL * span, CLUSTER_ABS_FLOOR)


def _row_tolerances(w: np.ndarray, cluster_tol: Optional[float]) -> np.ndarray:
    if cluster_tol is not None:
        return np.full(len(w), float(cluster_tol))
    return np.maximum(CLUSTER_REL_TOL * (w[:, -1] - w[:, 0]), CLUSTER_ABS_FLOOR)


def regular_flags(w: np.ndarray, cluster_tol: Optional[float] = None,
                  factor: float = REGULAR_GAP_FACTOR) -> np.ndarray:
    """Per row of sorted eigenvalues: every inter-cluster gap exceeds ``factor * tol``."""
    tol = _row_tolerances(w, cluster_tol)[:, None]
    gaps = np.diff(w, axis=1)
    return np.all((gaps <= tol) | (gaps > factor * tol), axis=1)


def charpoly_coefficients(w: np.ndarray) -> np.ndarray:
    """Coefficients of ``prod (t - w_i)``, leading 1 first; works row-wise on 2-D input."""
    w = np.asarray(w, dtype=float)
    c = np.zeros(w.shape[:-1] + (w.shape[-1] + 1,))
    c[..., 0] = 1.0
    for i in range(w.shape[-1]):
        c[..., 1:i + 2] = c[..., 1:i + 2] - w[..., i, None] * c[..., 0:i + 1]
    return c


def cluster_bounds(eigenvalues: np.ndarray, tol: float) -> List[Tuple[int, int]]:
    """Split sorted eigenvalues into runs whose consecutive gaps are <= tol."""
    if len(eigenvalues) == 0:
        return []
    cuts = np.flatnonzero(np.diff(eigenvalues) > tol) + 1
    edges = [0, *cuts.tolist(), len(eigenvalues)]
    return list(zip(edges[:-1], edges[1:]))


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    """Clustered spectrum of a symmetric matrix.

    ``charpoly`` holds the coefficients of ``det(t I - M)`` from the leading
    1 downwards, computed from the unclustered eigenvalues.
    """

    eigenvalues: np.ndarray
    multiplicities: Tuple[int, ...]
    cluster_tol: float
    charpoly: np.ndarray
    raw_eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def bounds(self) -> List[Tuple[int, int]]:
        stops = np.cumsum(self.multiplicities)
        return list(zip((stops - np.asarray(self.multiplicities)).tolist(), stops.tolist()))

    def cluster_basis(self, which: int) -> np.ndarray:
        """Orthonormal eigenbasis (columns) of cluster ``which``."""
        s, e = self.bounds[which]
        return self.eigenvectors[:, s:e]

    @property
    def min_gap(self) -> float:
        return float(np.min(np.diff(self.eigenvalues))) if len(self.eigenvalues) > 1 else np.inf

    def is_regular(self, factor: float = REGULAR_GAP_FACTOR) -> bool:
        """All inter-cluster gaps exceed ``factor * cluster_tol``."""
        w = self.raw_eigenvalues
        gaps = [w[s] - w[s - 1] for s, _ in self.bounds[1:]]
        return bool(all(g > factor * self.cluster_tol for g in gaps))

    def cluster_index(self, value: float) -> int:
        return int(np.argmin(np.abs(self.eigenvalues - value)))


def _profile_from_eigh(w: np.ndarray, V: np.ndarray, cluster_tol: Optional[float]) -> SpectralProfile:
    tol = default_cluster_tol(w) if cluster_tol is None else float(cluster_tol)
    bounds = cluster_bounds(w, tol)
    return SpectralProfile(
        eigenvalues=np.array([w[s:e].mean() for s, e in bounds]),
        multiplicities=tuple(e - s for s, e in bounds),
        cluster_tol=tol,
        charpoly=charpoly_coefficients(w),
        raw_eigenvalues=w,
        eigenvectors=V,
    )


def spectral_profile(J, cluster_tol: Optional[float] = None) -> SpectralProfile:
    """Eigendecompose a Jacobi operator (or symmetric matrix) and cluster its spectrum."""
    M = J.matrix if isinstance(J, JacobiOperator) else np.asarray(J, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max(initial=0))):
        raise ValueError("matrix is not symmetric")
    w, V = _eigh(0.5 * (M + M.T))
    return _profile_from_eigh(w, V, cluster_tol)


@dataclass(frozen=True, eq=False)
class SphereSample:
    points: np.ndarray
    seed: Optional[int] = None
    regular_flags: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def from_points(cls, points, seed=None) -> "SphereSample":
        P = np.atleast_2d(np.asarray(points, dtype=float))
        norms = np.linalg.norm(P, axis=1)
        if np.any(np.abs(norms - 1) > 1e-12):
            raise ValueError("sample points must be unit vectors")
        return cls(P, seed)

    def transformed(self, Q) -> "SphereSample":
        """Points mapped by the orthogonal matrix ``Q``."""
        return SphereSample(self.points @ np.asarray(Q).T, self.seed, self.regular_flags)


def sample_unit_sphere(n: int, K: int, seed) -> SphereSample:
    """``K`` normalized standard Gaussian vectors in R^n."""
    if K < 1:
        raise ValueError("K must be >= 1")
    G = np.random.default_rng(seed).standard_normal((K, n))
    return SphereSample(G / np.linalg.norm(G, axis=1, keepdims=True), seed)


def _check_sample(t: AlgebraicCurvatureTensor, sample: SphereSample):
    if sample.n != t.n:
        raise ValueError(f"sample dimension {sample.n} does not match tensor dimension {t.n}")


def _sample_eigh(t: AlgebraicCurvatureTensor, sample: SphereSample):
    M = jacobi_matrices(t, sample.points)
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"symmetric eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(w), axis=1))[0])
        raise EigensolverError(f"non-finite eigenvalues at sample point {bad}")
    return w, V


def profile_sample(t: AlgebraicCurvatureTensor, sample: SphereSample,
                   cluster_tol: Optional[float] = None) -> SphereSample:
    """Copy of ``sample`` with ``regular_flags`` filled in."""
    _check_sample(t, sample)
    w, _ = _sample_eigh(t, sample)
    return replace(sample, regular_flags=regular_flags(w, cluster_tol))


@dataclass(frozen=True, eq=False)
class OssermanReport:
    profile_spread: float
    coeff_spread: float
    tolerance: float
    verdict: bool
    witness: Tuple[np.ndarray, np.ndarray]
    witness_indices: Tuple[int, int]
    spectra: np.ndarray = field(repr=False)
    charpolys: np.ndarray = field(repr=False)
    regular_flags: np.ndarray = field(repr=False)
    samples: int = 0
    seed: Optional[int] = None


def osserman_report(t: AlgebraicCurvatureTensor, sample: SphereSample,
                    cluster_tol: Optional[float] = None,
                    tolerance: float = DEFAULT_TOLERANCE) -> OssermanReport:
    """How far the Jacobi spectrum moves across the sample.

    ``profile_spread`` is the largest l-inf distance between two sorted
    eigenvalue vectors; ``coeff_spread`` is the largest deviation of a
    characteristic polynomial coefficient from its median over the sample.
    """
    _check_sample(t, sample)
    w, _ = _sample_eigh(t, sample)
    # max over pairs of max_k |w_pk - w_qk| = max_k (max_p w_pk - min_p w_pk)
    hi, lo = w.argmax(axis=0), w.argmin(axis=0)
    ranges = w[hi, np.arange(t.n)] - w[lo, np.arange(t.n)]
    k = int(np.argmax(ranges))
    spread = float(ranges[k])
    coeffs = charpoly_coefficients(w)
    coeff_spread = float(np.max(np.abs(coeffs - np.median(coeffs, axis=0))))
    flags = regular_flags(w, cluster_tol)
    i, j = int(lo[k]), int(hi[k])
    return OssermanReport(
        profile_spread=spread,
        coeff_spread=coeff_spread,
        tolerance=tolerance,
        verdict=bool(spread <= tolerance),
        witness=(sample.points[i].copy(), sample.points[j].copy()),
        witness_indices=(i, j),
        spectra=w,
        charpolys=coeffs,
        regular_flags=flags,
        samples=len(sample),
        seed=sample.seed,
    )


@dataclass(frozen=True)
class DualityRecord:
    base: np.ndarray
    eigenvalue: float
    eigenvector: np.ndarray
    residual: float
    base_index: int


@dataclass(frozen=True, eq=False)
class DualityReport:
    """Residuals ``|R_Y X - lam X|`` over sampled (X, lam, Y) triples, stored column-wise."""

    base_indices: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    max_residual: float = 0.0
    tolerance: float = DEFAULT_TOLERANCE
    verdict: bool = True
    samples: int = 0
    seed: Optional[int] = None

    def __len__(self) -> int:
        return len(self.residuals)

    def record(self, i: int) -> DualityRecord:
        b = int(self.base_indices[i])
        return DualityRecord(self.points[b], float(self.eigenvalues[i]),
                             self.eigenvectors[i], float(self.residuals[i]), b)

    @property
    def records(self) -> List[DualityRecord]:
        return [self.record(i) for i in range(len(self))]

    @property
    def witness(self) -> Optional[DualityRecord]:
        if len(self) == 0:
            return None
        return self.record(int(np.argmax(self.residuals)))


def _probe_rng(sample: SphereSample, probe_seed):
    if probe_seed is None:
        probe_seed = sample.seed if sample.seed is not None else 0
    return np.random.default_rng([int(probe_seed), 1])


def duality_report(t: AlgebraicCurvatureTensor, sample: SphereSample,
                   cluster_tol: Optional[float] = None,
                   tolerance: float = DEFAULT_TOLERANCE,
                   probes_per_eigenspace: int = 4,
                   probe_seed: Optional[int] = None) -> DualityReport:
    """Test the duality principle at every sample point.

    For each eigenvalue cluster of R_X the probes are an orthonormal basis
    of the eigenspace with X projected out, plus ``probes_per_eigenspace``
    random unit vectors inside it.  Projecting X out is what skips the
    trivial pair (0, +-X).
    """
    _check_sample(t, sample)
    if probes_per_eigenspace < 0:
        raise ValueError("probes_per_eigenspace must be >= 0")
    rng = _probe_rng(sample, probe_seed)
    w, V = _sample_eigh(t, sample)
    K, n = w.shape
    P = sample.points
    # coefficients for the probes of the cluster starting at eigenvalue s of point p
    C = rng.standard_normal((K, n, probes_per_eigenspace, n))
    tol = _row_tolerances(w, cluster_tol)
    simple = np.all(np.diff(w, axis=1) > tol[:, None], axis=1)
    chunks = []  # (base index, eigenvalue, probe vectors), later sorted by base index

    S = np.flatnonzero(simple)
    if len(S):
        B = V[S] - P[S][:, :, None] * np.einsum("pa,pai->pi", P[S], V[S])[:, None, :]
        norms = np.linalg.norm(B, axis=1)
        p_idx, i_idx = np.nonzero(norms > 0.5)
        basis = B[p_idx, :, i_idx] / norms[p_idx, i_idx, None]
        signs = np.sign(C[S[p_idx], i_idx, :, 0])
        signs[signs == 0] = 1.0
        Y = np.concatenate([basis[:, None, :], signs[:, :, None] * basis[:, None, :]], axis=1)
        reps = Y.shape[1]
        chunks.append((np.repeat(S[p_idx], reps), np.repeat(w[S[p_idx], i_idx], reps),
                       Y.reshape(-1, n)))

    for p in np.flatnonzero(~simple):
        X = P[p]
        for s, e in cluster_bounds(w[p], tol[p]):
            lam = w[p, s:e].mean()
            Bc = V[p][:, s:e]
            Bc = Bc - np.outer(X, X @ Bc)
            U, sv, _ = np.linalg.svd(Bc, full_matrices=False)
            basis = U[:, sv > 0.5]
            k = basis.shape[1]
            if k == 0:
                continue
            c = C[p, s, :, :k]
            c = c / np.linalg.norm(c, axis=1, keepdims=True)
            Y = np.vstack([basis.T, c @ basis.T])
            Y = Y / np.linalg.norm(Y, axis=1, keepdims=True)
            chunks.append((np.full(len(Y), p), np.full(len(Y), lam), Y))

    if chunks:
        base_idx = np.concatenate([c[0] for c in chunks])
        order = np.argsort(base_idx, kind="stable")
        base_idx = base_idx[order]
        lams = np.concatenate([c[1] for c in chunks])[order]
        Y = np.vstack([c[2] for c in chunks])[order]
        X = P[base_idx]
        RYX = np.einsum("qab,qb->qa", jacobi_matrices(t, Y), X)
        res = np.linalg.norm(RYX - lams[:, None] * X, axis=1)
    else:
        Y = np.zeros((0, n))
        base_idx, lams, res = np.zeros(0, int), np.zeros(0), np.zeros(0)
    max_res = float(res.max()) if len(res) else 0.0
    return DualityReport(
        base_indices=base_idx,
        eigenvalues=lams,
        eigenvectors=Y,
        residuals=res,
        points=sample.points,
        max_residual=max_res,
        tolerance=tolerance,
        verdict=bool(max_res <= tolerance),
        samples=len(sample),
        seed=sample.seed,
    )


@dataclass(frozen=True, eq=False)
class BranchDerivative:
    """Finite-difference and first-variation slopes of one eigenvalue branch."""

    base: np.ndarray
    direction: np.ndarray
    eigenvalue: float
    eigenvector: np.ndarray
    step: float
    fd_value: float
    analytic_value: float
    tolerance: float

    @property
    def error(self) -> float:
        return abs(self.fd_value - self.analytic_value)

    @property
    def ok(self) -> bool:
        return self.error <= self.tolerance


def _check_frame(X, Y, n):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != (n,) or Y.shape != (n,):
        raise ValueError(f"X and Y must have shape ({n},)")
    if abs(np.linalg.norm(X) - 1) > 1e-12 or abs(np.linalg.norm(Y) - 1) > 1e-12:
        raise ValueError("X and Y must be unit vectors")
    if abs(X @ Y) > 1e-10:
        raise ValueError(f"Y must be orthogonal to X (<X, Y> = {X @ Y:.3e})")
    return X, Y


def polarized_jacobi_matrix(t: AlgebraicCurvatureTensor, X, Y) -> np.ndarray:
    """Matrix of ``(u, v) -> jacobi_form(X, Y, u, v)``."""
    F = np.einsum("ajkb,j,k->ab", t.components, X, Y, optimize=True)
    return 0.5 * (F + F.T)


def _geodesic_point(X, Y, phi):
    return np.cos(phi) * X + np.sin(phi) * Y


def branch_derivative(t: AlgebraicCurvatureTensor, X, Y, which: int,
                      h: float = DEFAULT_STEP,
                      cluster_tol: Optional[float] = None,
                      min_overlap: float = 0.9) -> BranchDerivative:
    """Slope at phi = 0 of the eigenvalue branch ``which`` (a cluster index of R_X).

    The finite-difference value is central, ``(lam(h) - lam(-h)) / 2h``,
    tracking the branch by sorted position and checking eigenvector overlap.
    The analytic value is ``2 jacobi_form(X, Y, e0, e0)``; the term involving
    the derivative of the eigenvector drops out since ``<e0, e0'> = 0``.
    """
    X, Y = _check_frame(X, Y, t.n)
    if not 0 < h <= 1e-2:
        raise ValueError("step h must lie in (0, 1e-2]")
    prof = spectral_profile(jacobi_matrices(t, X[None])[0], cluster_tol)
    if not -len(prof.eigenvalues) <= which < len(prof.eigenvalues):
        raise IndexError(f"cluster index {which} out of range")
    which %= len(prof.eigenvalues)
    if prof.multiplicities[which] != 1:
        raise DegenerateBranchError(
            f"cluster {which} has multiplicity {prof.multiplicities[which]}; "
            "use degenerate_branch_matrix")
    if not prof.is_regular():
        raise BranchCrossingError("base point is not regular (eigenvalue gaps below threshold)")
    pos = prof.bounds[which][0]
    e0 = prof.eigenvectors[:, pos]
    lam0 = float(prof.raw_eigenvalues[pos])

    ends = np.array([_geodesic_point(X, Y, h), _geodesic_point(X, Y, -h)])
    w, V = np.linalg.eigh(jacobi_matrices(t, ends))
    for side in range(2):
        overlap = abs(V[side][:, pos] @ e0)
        if overlap <= min_overlap:
            raise BranchCrossingError(
                f"eigenvector overlap {overlap:.3f} at phi = {'+-'[side]}h; branch crossing suspected")
    fd = (w[0][pos] - w[1][pos]) / (2 * h)
    analytic = 2.0 * float(e0 @ polarized_jacobi_matrix(t, X, Y) @ e0)
    return BranchDerivative(
        base=X, direction=Y, eigenvalue=lam0, eigenvector=e0, step=h,
        fd_value=float(fd), analytic_value=analytic,
        tolerance=10.0 * t.norm * h,
    )


def degenerate_branch_matrix(t: AlgebraicCurvatureTensor, X, Y, basis) -> np.ndarray:
    """First-order splitting matrix ``M[i, j] = 2 jacobi_form(X, Y, e_i, e_j)``.

    ``basis`` holds an orthonormal eigenbasis of one cluster of R_X as
    columns.  The eigenvalues of the result are the slopes at phi = 0 of the
    analytic branches leaving the cluster (Rellich).
    """
    X, Y = _check_frame(X, Y, t.n)
    E = np.asarray(basis, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    if E.shape[0] != t.n:
        raise ValueError(f"basis vectors must have length {t.n}")
    if np.max(np.abs(E.T @ E - np.eye(E.shape[1]))) > 1e-10:
        raise ValueError("basis is not orthonormal to 1e-10")
    M = 2.0 * E.T @ polarized_jacobi_matrix(t, X, Y) @ E
    return 0.5 * (M + M.T)


def cluster_branch_matrix(t: AlgebraicCurvatureTensor, X, Y, which: int,
                          cluster_tol: Optional[float] = None) -> np.ndarray:
    """:func:`degenerate_branch_matrix` for cluster ``which`` of R_X."""
    prof = spectral_profile(jacobi_matrices(t, np.asarray(X, dtype=float)[None])[0], cluster_tol)
    return degenerate_branch_matrix(t, X, Y, prof.cluster_basis(which))


def random_frame(n: int, rng) -> Tuple[np.ndarray, np.ndarray]:
    """Random orthonormal pair (X, Y) in R^n."""
    G = rng.standard_normal((n, 2))
    Q, _ = np.linalg.qr(G)
    return Q[:, 0].copy(), Q[:, 1].copy()
