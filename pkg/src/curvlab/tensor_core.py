"""Algebraic curvature tensors and their Jacobi operators.

Components are stored densely as ``R[i, j, k, l] = R(e_i, e_j, e_k, e_l)``
with the convention ``R(X, Y, Z, W) = <R(X, Y)Z, W>`` and the unit sphere
tensor ``R(X, Y)Z = <Y, Z>X - <X, Z>Y``.  With this convention the Jacobi
operator ``R_X : Y -> R(Y, X)X`` of the unit sphere has eigenvalue ``+1``
on ``X^perp``.

Forms written in the other common slot order, where the Jacobi quadratic
form reads ``R(X, e, X, e)``, translate by swapping the first two slots:
``R_other(A, B, C, D) = R(B, A, C, D)``.  :func:`jacobi_form` is the
polarized Jacobi form in either convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

SYMMETRY_TOL = 1e-12

IDENTITIES = (
    "antisymmetry_first_pair",
    "antisymmetry_last_pair",
    "pair_exchange",
    "first_bianchi",
)


class CurvatureSymmetryError(ValueError):
    """Raised when a component array is not an algebraic curvature tensor."""

    def __init__(self, identity: str, index: Tuple[int, ...], violation: float, tol: float):
        self.identity = identity
        self.index = index
        self.violation = violation
        self.tol = tol
        super().__init__(
            f"{identity} violated by {violation:.3e} (tolerance {tol:.1e}) "
            f"at index {index}"
        )


@dataclass(frozen=True)
class RawTensor:
    """Arbitrary rank-4 array of shape (n, n, n, n); no symmetry assumed."""

    n: int
    components: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != (self.n,) * 4:
            raise ValueError(f"expected shape {(self.n,) * 4}, got {comps.shape}")
        object.__setattr__(self, "components", comps)


@dataclass(frozen=True, eq=False)
class AlgebraicCurvatureTensor:
    """Validated, immutable algebraic curvature tensor on R^n.

    Build through :func:`from_dense` or :func:`project_to_curvature`; the
    constructor itself trusts its input.
    """

    n: int
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        comps = np.array(self.components, dtype=float)
        comps.flags.writeable = False
        object.__setattr__(self, "components", comps)

    @property
    def norm(self) -> float:
        """Frobenius norm of the component array."""
        return float(np.linalg.norm(self.components.ravel()))

    def scaled(self, c: float) -> "AlgebraicCurvatureTensor":
        return AlgebraicCurvatureTensor(self.n, c * self.components)

    def __add__(self, other: "AlgebraicCurvatureTensor") -> "AlgebraicCurvatureTensor":
        if not isinstance(other, AlgebraicCurvatureTensor):
            return NotImplemented
        _check_same_dim(self, other)
        return AlgebraicCurvatureTensor(self.n, self.components + other.components)

    def __sub__(self, other: "AlgebraicCurvatureTensor") -> "AlgebraicCurvatureTensor":
        if not isinstance(other, AlgebraicCurvatureTensor):
            return NotImplemented
        _check_same_dim(self, other)
        return AlgebraicCurvatureTensor(self.n, self.components - other.components)

    def evaluate(self, X, Y, Z, W) -> float:
        return evaluate(self, X, Y, Z, W)

    def jacobi(self, X) -> "JacobiOperator":
        return jacobi_operator(self, X)


@dataclass(frozen=True, eq=False)
class JacobiOperator:
    """Symmetric matrix of ``Y -> R(Y, X)X`` at a unit vector ``X``.

    ``matrix[a, b] = R(e_a, X, X, e_b)``.
    """

    base: np.ndarray
    matrix: np.ndarray

    def __matmul__(self, v):
        return self.matrix @ v


def _check_same_dim(a: AlgebraicCurvatureTensor, b: AlgebraicCurvatureTensor):
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")


def _violation_arrays(R: np.ndarray):
    yield "antisymmetry_first_pair", R + R.transpose(1, 0, 2, 3)
    yield "antisymmetry_last_pair", R + R.transpose(0, 1, 3, 2)
    yield "pair_exchange", R - R.transpose(2, 3, 0, 1)
    # R(X,Y,Z,W) + R(Y,Z,X,W) + R(Z,X,Y,W)
    yield "first_bianchi", R + R.transpose(2, 0, 1, 3) + R.transpose(1, 2, 0, 3)


def validate_symmetries(t) -> List[Tuple[str, float]]:
    """Maximal absolute violation of each of the four curvature identities."""
    R = t.components if hasattr(t, "components") else np.asarray(t, dtype=float)
    return [(name, float(np.max(np.abs(v))) if v.size else 0.0)
            for name, v in _violation_arrays(R)]


def symmetry_tolerance(components: np.ndarray, tol: float = SYMMETRY_TOL) -> float:
    """Absolute tolerance: ``tol`` relative to the largest component, floored at unit scale."""
    scale = float(np.max(np.abs(components))) if components.size else 0.0
    return tol * max(1.0, scale)


def from_dense(n: int, data, tol: float = SYMMETRY_TOL) -> AlgebraicCurvatureTensor:
    """Validate a dense component array and wrap it as a curvature tensor.

    ``data`` may be any array-like holding exactly ``n**4`` entries (nested
    or flat row-major).  Raises ``ValueError`` on shape mismatch or a
    non-finite entry and :class:`CurvatureSymmetryError` when one of the
    identities fails beyond ``tol`` (relative to max |component| when that
    exceeds 1).
    """
    if int(n) != n or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n!r}")
    n = int(n)
    arr = np.asarray(data, dtype=float)
    if arr.size != n ** 4:
        raise ValueError(f"expected {n ** 4} entries for n={n}, got {arr.size}")
    arr = arr.reshape((n,) * 4)
    if not np.all(np.isfinite(arr)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
        raise ValueError(f"non-finite component at index {bad}")
    abs_tol = symmetry_tolerance(arr, tol)
    for name, v in _violation_arrays(arr):
        flat = int(np.argmax(np.abs(v)))
        worst = float(np.abs(v).ravel()[flat])
        if worst > abs_tol:
            index = tuple(int(i) for i in np.unravel_index(flat, v.shape))
            raise CurvatureSymmetryError(name, index, worst, abs_tol)
    return AlgebraicCurvatureTensor(n, arr)


def _pair_symmetrize(R: np.ndarray) -> np.ndarray:
    # Each step is exact in floating point on the previous step's output,
    # so the three pair identities hold to storage equality afterwards.
    R = 0.5 * (R - R.swapaxes(-4, -3))
    R = 0.5 * (R - R.swapaxes(-2, -1))
    axes = list(range(R.ndim))
    axes[-4:] = [axes[-2], axes[-1], axes[-4], axes[-3]]
    return 0.5 * (R + R.transpose(axes))


def _cyclic_sum(R: np.ndarray) -> np.ndarray:
    # sigma(R)(X,Y,Z,W) = R(X,Y,Z,W) + R(Y,Z,X,W) + R(Z,X,Y,W)
    lead = list(range(R.ndim - 4))
    a, b, c, d = (R.ndim - 4 + i for i in range(4))
    return R + R.transpose(lead + [c, a, b, d]) + R.transpose(lead + [b, c, a, d])


def project_array(raw: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the curvature subspace, over the last four axes.

    Leading axes are treated as a batch.
    """
    R = _pair_symmetrize(np.asarray(raw, dtype=float))
    R = R - _cyclic_sum(R) / 3.0
    return _pair_symmetrize(R)


def project_to_curvature(raw) -> AlgebraicCurvatureTensor:
    """Frobenius-orthogonal projection of an arbitrary rank-4 array onto curvature tensors."""
    if isinstance(raw, (RawTensor, AlgebraicCurvatureTensor)):
        n, comps = raw.n, raw.components
    else:
        comps = np.asarray(raw, dtype=float)
        n = comps.shape[0] if comps.ndim else 0
        if comps.shape != (n,) * 4:
            raise ValueError(f"expected an (n, n, n, n) array, got shape {comps.shape}")
    if not np.all(np.isfinite(comps)):
        raise ValueError("non-finite entries in raw tensor")
    return AlgebraicCurvatureTensor(n, project_array(comps))


def curvature_basis(n: int) -> np.ndarray:
    """Orthonormal basis of the curvature subspace, shape (dim, n, n, n, n).

    The dimension is ``n**2 (n**2 - 1) / 12``.
    """
    N = n ** 4
    P = project_array(np.eye(N).reshape((N,) + (n,) * 4)).reshape(N, N)
    w, V = np.linalg.eigh(0.5 * (P + P.T))
    keep = w > 0.5
    return V[:, keep].T.reshape((-1,) + (n,) * 4)


def _as_vector(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {v.shape}")
    return v


def evaluate(t: AlgebraicCurvatureTensor, X, Y, Z, W) -> float:
    """Quadrilinear contraction ``sum R[i,j,k,l] X_i Y_j Z_k W_l``."""
    X, Y, Z, W = (_as_vector(v, t.n, s) for v, s in zip((X, Y, Z, W), "XYZW"))
    return float(np.einsum("ijkl,i,j,k,l->", t.components, X, Y, Z, W, optimize=True))


def jacobi_matrices(t: AlgebraicCurvatureTensor, points: np.ndarray) -> np.ndarray:
    """Jacobi matrices at every row of ``points`` (shape (K, n)); returns (K, n, n).

    No unit-norm check; the matrices are symmetrized.
    """
    n = t.n
    P = np.atleast_2d(np.asarray(points, dtype=float))
    # M[p, a, b] = sum_{jk} R[a, j, k, b] X_j X_k
    Rjk = t.components.transpose(1, 2, 0, 3).reshape(n * n, n * n)
    XX = np.einsum("pj,pk->pjk", P, P).reshape(len(P), n * n)
    M = (XX @ Rjk).reshape(len(P), n, n)
    return 0.5 * (M + M.transpose(0, 2, 1))


def jacobi_operator(t: AlgebraicCurvatureTensor, X, unit_tol: float = 1e-12) -> JacobiOperator:
    """The Jacobi operator ``R_X`` at a unit vector ``X``."""
    X = _as_vector(X, t.n, "X")
    if abs(np.linalg.norm(X) - 1.0) > unit_tol:
        raise ValueError(f"X must be a unit vector (|X| = {np.linalg.norm(X)!r})")
    M = jacobi_matrices(t, X[None, :])[0]
    M.flags.writeable = False
    return JacobiOperator(base=X.copy(), matrix=M)


def jacobi_form(t: AlgebraicCurvatureTensor, X, Y, u, v) -> float:
    """Polarized Jacobi form ``(R(u, X, Y, v) + R(u, Y, X, v)) / 2``.

    Symmetric in ``(X, Y)`` and in ``(u, v)``; on the diagonal it is
    ``<R_X u, u>``.  Twice its value at ``(X, Y, e, e)`` is the first
    variation of ``<R_{X(phi)} e, e>`` along ``cos(phi) X + sin(phi) Y``.
    """
    n = t.n
    X, Y, u, v = (_as_vector(w, n, s) for w, s in zip((X, Y, u, v), ("X", "Y", "u", "v")))
    R = t.components
    a = np.einsum("ijkl,i,j,k,l->", R, u, X, Y, v, optimize=True)
    b = np.einsum("ijkl,i,j,k,l->", R, u, Y, X, v, optimize=True)
    return float(0.5 * (a + b))


def conjugate(t: AlgebraicCurvatureTensor, Q) -> AlgebraicCurvatureTensor:
    """Push ``t`` forward by the orthogonal matrix ``Q``: ``R'(QX, QY, QZ, QW) = R(X, Y, Z, W)``."""
    Q = np.asarray(Q, dtype=float)
    comps = np.einsum("ia,jb,kc,ld,abcd->ijkl", Q, Q, Q, Q, t.components, optimize=True)
    return AlgebraicCurvatureTensor(t.n, _pair_symmetrize(comps))
