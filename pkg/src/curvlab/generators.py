"""Constructors for Osserman tensors, random tensors and perturbations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import ortho_group

from .tensor_core import AlgebraicCurvatureTensor, project_array

CLIFFORD_TOL = 1e-12

_J2 = np.array([[0.0, -1.0], [1.0, 0.0]])

# Left multiplication by i, j, k on the quaternions in the basis (1, i, j, k).
_QI = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
_QJ = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
_QK = np.array([[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], dtype=float)


def _unit_sphere_components(n: int) -> np.ndarray:
    d = np.eye(n)
    # <Y,Z><X,W> - <X,Z><Y,W>
    return np.einsum("jk,il->ijkl", d, d) - np.einsum("ik,jl->ijkl", d, d)


def _complex_structure_components(J: np.ndarray) -> np.ndarray:
    # R_J(X,Y,Z,W) = <JY,Z><JX,W> - <JX,Z><JY,W> - 2<JX,Y><JZ,W>,
    # with <J e_a, e_b> = J[b, a].
    Jt = J.T
    return (np.einsum("jk,il->ijkl", Jt, Jt)
            - np.einsum("ik,jl->ijkl", Jt, Jt)
            - 2.0 * np.einsum("ij,kl->ijkl", Jt, Jt))


def constant_curvature(n: int, lam: float) -> AlgebraicCurvatureTensor:
    """Space form of sectional curvature ``lam``: Jacobi spectrum {0, lam x (n-1)}."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return AlgebraicCurvatureTensor(n, lam * _unit_sphere_components(n))


def plane_tensor(u, v, kappa: float = 1.0) -> AlgebraicCurvatureTensor:
    """Curvature ``kappa`` concentrated on the plane spanned by orthonormal ``u, v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if abs(u @ u - 1) > 1e-12 or abs(v @ v - 1) > 1e-12 or abs(u @ v) > 1e-12:
        raise ValueError("u and v must be orthonormal")
    w = np.outer(u, v) - np.outer(v, u)
    return AlgebraicCurvatureTensor(len(u), -kappa * np.einsum("ij,kl->ijkl", w, w))


def single_plane(n: int, kappa: float = 1.0) -> AlgebraicCurvatureTensor:
    """Only the (e0, e1) plane is curved: ``R(e0, e1, e1, e0) = kappa``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    e = np.eye(n)
    return plane_tensor(e[0], e[1], kappa)


@dataclass(frozen=True, eq=False)
class CliffordSystem:
    """Anticommuting orthogonal complex structures with curvature coefficients."""

    n: int
    structures: Tuple[np.ndarray, ...]
    lambda0: float = 1.0
    lambdas: Tuple[float, ...] = ()

    def __post_init__(self):
        structures = tuple(np.asarray(J, dtype=float) for J in self.structures)
        lambdas = tuple(float(c) for c in self.lambdas) or (1.0,) * len(structures)
        if len(lambdas) != len(structures):
            raise ValueError("need one coefficient per structure")
        object.__setattr__(self, "structures", structures)
        object.__setattr__(self, "lambdas", lambdas)
        self.check()

    def check(self, tol: float = CLIFFORD_TOL):
        eye = np.eye(self.n)
        for i, J in enumerate(self.structures):
            if J.shape != (self.n, self.n):
                raise ValueError(f"J{i + 1} has shape {J.shape}, expected {(self.n, self.n)}")
            if np.max(np.abs(J + J.T)) > tol:
                raise ValueError(f"J{i + 1} is not skew")
            if np.max(np.abs(J @ J + eye)) > tol:
                raise ValueError(f"J{i + 1} does not square to -I")
            for k in range(i):
                K = self.structures[k]
                if np.max(np.abs(J @ K + K @ J)) > tol:
                    raise ValueError(f"J{k + 1} and J{i + 1} do not anticommute")


def random_orthogonal(n: int, seed) -> np.ndarray:
    """Haar-distributed orthogonal matrix, deterministic in ``seed``."""
    if n == 1:
        return np.ones((1, 1))
    return ortho_group.rvs(n, random_state=np.random.default_rng(seed))


def make_clifford_structures(n: int, m: int, seed=None) -> List[np.ndarray]:
    """``m`` anticommuting complex structures on R^n from block constructions.

    m = 1 needs n even; m = 2, 3 need n divisible by 4 (a second structure
    already forces a quaternionic module).  With a seed, the blocks are
    conjugated by a seeded random orthogonal matrix.
    """
    if m == 1:
        if n % 2:
            raise ValueError(f"(n={n}, m=1) inadmissible: n must be even")
        blocks = [_J2]
    elif m in (2, 3):
        if n % 4:
            raise ValueError(f"(n={n}, m={m}) inadmissible: n must be divisible by 4")
        blocks = [_QI, _QJ, _QK][:m]
    else:
        raise ValueError(f"m={m} not supported (m must be 1, 2 or 3)")
    size = blocks[0].shape[0]
    structures = [np.kron(np.eye(n // size), B) for B in blocks]
    if seed is not None:
        Q = random_orthogonal(n, seed)
        structures = [Q @ J @ Q.T for J in structures]
    return structures


def clifford_osserman(system: CliffordSystem) -> AlgebraicCurvatureTensor:
    """``lambda0 R_1 + sum_i lambda_i R_{J_i}``.

    At a unit X the Jacobi spectrum is 0 on X, ``lambda0 + 3 lambda_i`` on
    ``J_i X`` and ``lambda0`` on the rest.
    """
    comps = system.lambda0 * _unit_sphere_components(system.n)
    for lam, J in zip(system.lambdas, system.structures):
        comps = comps + lam * _complex_structure_components(J)
    return AlgebraicCurvatureTensor(system.n, comps)


def complex_space_form(n: int, lambda0: float = 1.0, lambda1: float = 1.0, seed=None) -> AlgebraicCurvatureTensor:
    J = make_clifford_structures(n, 1, seed)
    return clifford_osserman(CliffordSystem(n, tuple(J), lambda0, (lambda1,)))


def random_curvature(n: int, seed, scale: float = 1.0) -> AlgebraicCurvatureTensor:
    """Projected i.i.d. Gaussian tensor with Frobenius norm ``scale``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if scale <= 0:
        raise ValueError("scale must be positive")
    rng = np.random.default_rng(seed)
    comps = project_array(rng.standard_normal((n,) * 4))
    comps = comps * (scale / np.linalg.norm(comps.ravel()))
    return AlgebraicCurvatureTensor(n, comps)


def perturb(t: AlgebraicCurvatureTensor, noise: AlgebraicCurvatureTensor, eps: float) -> AlgebraicCurvatureTensor:
    if t.n != noise.n:
        raise ValueError(f"dimension mismatch: {t.n} vs {noise.n}")
    if eps == 0:
        return t
    return AlgebraicCurvatureTensor(t.n, t.components + eps * noise.components)


KINDS = ("constant", "complex", "clifford", "random", "perturbed", "single_plane")


@dataclass
class TensorDescriptor:
    """One corpus entry.  ``params`` depend on ``kind``:

    constant: lambda; complex: lambda0, lambda1; clifford: m, lambda0,
    lambdas; random: scale; single_plane: kappa; perturbed: base (a nested
    descriptor dict), epsilon, noise_seed.
    """

    kind: str
    n: int
    params: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    label: Optional[str] = None

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "TensorDescriptor":
        unknown = set(d) - {"kind", "n", "params", "seed", "label"}
        if unknown:
            raise ValueError(f"unknown descriptor keys: {sorted(unknown)}")
        return cls(kind=d["kind"], n=int(d["n"]), params=dict(d.get("params", {})),
                   seed=d.get("seed"), label=d.get("label"))

    def to_dict(self) -> Dict[str, Any]:
        d = {"kind": self.kind, "n": self.n, "params": self.params, "seed": self.seed}
        if self.label is not None:
            d["label"] = self.label
        return d

    @property
    def ident(self) -> str:
        if self.label:
            return self.label
        parts = [f"{k}={self.params[k]}" for k in sorted(self.params) if k != "base"]
        if "base" in self.params:
            parts.insert(0, "base=" + TensorDescriptor.from_dict(self.params["base"]).ident)
        return f"{self.kind}(n={self.n}" + "".join(", " + p for p in parts) + f", seed={self.seed})"

    def build(self) -> AlgebraicCurvatureTensor:
        p = self.params
        if self.kind == "constant":
            return constant_curvature(self.n, float(p.get("lambda", 1.0)))
        if self.kind == "complex":
            return complex_space_form(self.n, float(p.get("lambda0", 1.0)),
                                      float(p.get("lambda1", 1.0)), self.seed)
        if self.kind == "clifford":
            m = int(p.get("m", 1))
            lambdas = tuple(p.get("lambdas", (1.0,) * m))
            J = make_clifford_structures(self.n, m, self.seed)
            return clifford_osserman(CliffordSystem(self.n, tuple(J), float(p.get("lambda0", 1.0)), lambdas))
        if self.kind == "random":
            return random_curvature(self.n, self.seed, float(p.get("scale", 1.0)))
        if self.kind == "single_plane":
            return single_plane(self.n, float(p.get("kappa", 1.0)))
        if self.kind == "perturbed":
            base = TensorDescriptor.from_dict(p["base"]).build()
            if base.n != self.n:
                raise ValueError("perturbed base has a different dimension")
            noise_seed = p.get("noise_seed", self.seed)
            if noise_seed is None:
                noise_seed = 0
            noise = random_curvature(self.n, noise_seed, float(p.get("noise_scale", 1.0)))
            return perturb(base, noise, float(p.get("epsilon", 0.0)))
        raise ValueError(f"unknown tensor kind {self.kind!r}; expected one of {KINDS}")


@dataclass
class CorpusSpec:
    """Tensor descriptors plus optional perturbation scales.

    With non-empty ``epsilons`` every descriptor is expanded into one
    perturbed entry per scale, the noise seeded by the descriptor's own
    seed (or its position in the list when it has none).
    """

    descriptors: List[TensorDescriptor]
    epsilons: Sequence[float] = ()

    @classmethod
    def from_json_obj(cls, obj) -> "CorpusSpec":
        if isinstance(obj, list):
            return cls([TensorDescriptor.from_dict(d) for d in obj])
        return cls([TensorDescriptor.from_dict(d) for d in obj["tensors"]],
                   tuple(float(e) for e in obj.get("epsilons", ())))

    def expanded(self) -> List[TensorDescriptor]:
        if not self.epsilons:
            return list(self.descriptors)
        out = []
        for pos, d in enumerate(self.descriptors):
            noise_seed = d.seed if d.seed is not None else pos
            for eps in self.epsilons:
                out.append(TensorDescriptor(
                    "perturbed", d.n,
                    {"base": d.to_dict(), "epsilon": eps, "noise_seed": noise_seed},
                    seed=d.seed))
        return out

    def resolve(self) -> List[Tuple[str, AlgebraicCurvatureTensor]]:
        return [(d.ident, d.build()) for d in self.expanded()]
