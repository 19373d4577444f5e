import numpy as np
import pytest

from curvlab.generators import (
    CliffordSystem,
    CorpusSpec,
    TensorDescriptor,
    clifford_osserman,
    complex_space_form,
    constant_curvature,
    make_clifford_structures,
    perturb,
    plane_tensor,
    random_curvature,
    single_plane,
)
from curvlab.spectral import osserman_report, sample_unit_sphere
from curvlab.tensor_core import jacobi_operator, validate_symmetries


def max_violation(t):
    return max(v for _, v in validate_symmetries(t))


def spectrum(t, X):
    return np.linalg.eigvalsh(jacobi_operator(t, X).matrix)


def test_constant_curvature_examples():
    np.testing.assert_array_equal(jacobi_operator(constant_curvature(3, 1), np.eye(3)[0]).matrix,
                                  np.diag([0.0, 1.0, 1.0]))
    assert not np.any(constant_curvature(5, 0).components)
    X = np.ones(4) / 2
    np.testing.assert_allclose(spectrum(constant_curvature(4, -2), X), [-2, -2, -2, 0], atol=1e-14)


def test_clifford_2d_is_rotation():
    (J,) = make_clifford_structures(2, 1)
    np.testing.assert_array_equal(J, [[0, -1], [1, 0]])
    (Js,) = make_clifford_structures(2, 1, seed=4)
    assert np.allclose(Js, J) or np.allclose(Js, -J)


@pytest.mark.parametrize("n,m", [(4, 3), (8, 3), (4, 2), (6, 1), (12, 3), (16, 2)])
@pytest.mark.parametrize("seed", [None, 3])
def test_clifford_invariants(n, m, seed):
    Js = make_clifford_structures(n, m, seed)
    assert len(Js) == m
    I = np.eye(n)
    for i, J in enumerate(Js):
        assert np.abs(J + J.T).max() <= 1e-12
        assert np.abs(J @ J + I).max() <= 1e-12
        for K in Js[:i]:
            assert np.abs(J @ K + K @ J).max() <= 1e-12


@pytest.mark.parametrize("n,m", [(3, 1), (6, 2), (6, 3), (4, 4), (5, 1)])
def test_clifford_inadmissible(n, m):
    with pytest.raises(ValueError):
        make_clifford_structures(n, m)


def test_clifford_system_rejects_bad_structures():
    with pytest.raises(ValueError, match="square to -I"):
        CliffordSystem(2, (2 * np.array([[0.0, -1.0], [1.0, 0.0]]),))
    J1, J2, _ = make_clifford_structures(4, 3)
    with pytest.raises(ValueError, match="anticommute"):
        CliffordSystem(4, (J1, J1))


def test_clifford_without_structures_is_unit_sphere():
    t = clifford_osserman(CliffordSystem(5, (), 1.0))
    np.testing.assert_array_equal(t.components, constant_curvature(5, 1).components)


def test_complex_structure_eigenvector(rng):
    # J X carries lambda0 + 3 lambda1
    (J,) = make_clifford_structures(6, 1, seed=2)
    t = clifford_osserman(CliffordSystem(6, (J,), 0.5, (2.0,)))
    X = rng.standard_normal(6)
    X /= np.linalg.norm(X)
    M = jacobi_operator(t, X).matrix
    np.testing.assert_allclose(M @ (J @ X), 6.5 * (J @ X), atol=1e-13)


def test_complex_space_form_spectrum_500():
    t = complex_space_form(4, 1, 1, seed=1)
    rep = osserman_report(t, sample_unit_sphere(4, 500, 0))
    assert rep.profile_spread <= 1e-10
    np.testing.assert_allclose(rep.spectra[0], [0, 1, 1, 4], atol=1e-10)


def test_quaternionic_n8_spectrum_500():
    Js = make_clifford_structures(8, 3, seed=5)
    t = clifford_osserman(CliffordSystem(8, tuple(Js), 1.0, (1.0, 1.0, 1.0)))
    rep = osserman_report(t, sample_unit_sphere(8, 500, 0))
    assert rep.profile_spread <= 1e-10
    np.testing.assert_allclose(rep.spectra[0], [0, 1, 1, 1, 1, 4, 4, 4], atol=1e-10)


@pytest.mark.parametrize("n,m", [(2, 1), (4, 1), (4, 2), (4, 3), (6, 1), (8, 1), (8, 2), (8, 3),
                                 (10, 1), (12, 2), (12, 3), (14, 1), (16, 1), (16, 3)])
def test_clifford_families_are_osserman(n, m):
    lambdas = tuple(np.linspace(0.5, 1.5, m))
    t = clifford_osserman(CliffordSystem(n, tuple(make_clifford_structures(n, m, seed=n + m)), 0.7, lambdas))
    assert max_violation(t) <= 1e-12
    rep = osserman_report(t, sample_unit_sphere(n, 200, 1))
    assert rep.profile_spread <= 1e-9
    expected = sorted([0.0] + [0.7 + 3 * c for c in lambdas] + [0.7] * (n - 1 - m))
    np.testing.assert_allclose(rep.spectra[0], expected, atol=1e-9)


def test_random_curvature_properties():
    t = random_curvature(3, 42, 1.0)
    assert max_violation(t) <= 1e-12
    assert t.norm == pytest.approx(1.0, abs=1e-12)
    assert random_curvature(3, 42, 2.5).norm == pytest.approx(2.5, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_random_curvature_dimension_two_is_osserman(seed):
    rep = osserman_report(random_curvature(2, seed), sample_unit_sphere(2, 100, seed))
    assert rep.profile_spread <= 1e-10


def test_random_curvature_dimension_four_is_not_osserman():
    rep = osserman_report(random_curvature(4, 7, 1.0), sample_unit_sphere(4, 200, 0))
    assert rep.profile_spread > 0.01


def test_generators_are_deterministic():
    assert np.array_equal(random_curvature(5, 9).components, random_curvature(5, 9).components)
    a = complex_space_form(6, 1, 2, seed=3).components
    b = complex_space_form(6, 1, 2, seed=3).components
    assert np.array_equal(a, b)
    assert not np.array_equal(random_curvature(5, 9).components, random_curvature(5, 10).components)


def test_clifford_linearity():
    Js = tuple(make_clifford_structures(8, 3, seed=1))
    base = clifford_osserman(CliffordSystem(8, Js, 0.3, (1.1, -0.4, 2.0))).components
    # powers of two scale exactly in floating point
    doubled = clifford_osserman(CliffordSystem(8, Js, 0.6, (2.2, -0.8, 4.0))).components
    assert np.array_equal(doubled, 2 * base)
    c = 0.37
    scaled = clifford_osserman(CliffordSystem(8, Js, 0.3 * c, (1.1 * c, -0.4 * c, 2.0 * c))).components
    np.testing.assert_allclose(scaled, c * base, rtol=0, atol=1e-15)


def test_perturb_examples():
    t = complex_space_form(4, 1, 1)
    noise = random_curvature(4, 9, 1.0)
    assert perturb(t, noise, 0.0) is t
    zero = constant_curvature(4, 0)
    np.testing.assert_array_equal(perturb(zero, noise, 1.0).components, noise.components)
    p = perturb(t, noise, 0.1)
    assert max_violation(p) <= 1e-12
    assert osserman_report(p, sample_unit_sphere(4, 200, 0)).profile_spread > 1e-3
    with pytest.raises(ValueError):
        perturb(t, random_curvature(3, 1), 0.1)


def test_single_plane_components():
    t = single_plane(3)
    R = t.components
    assert R[0, 1, 1, 0] == 1.0 and R[1, 0, 0, 1] == 1.0
    assert R[0, 1, 0, 1] == -1.0 and R[1, 0, 1, 0] == -1.0
    assert np.count_nonzero(R) == 4


def test_plane_tensor_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        plane_tensor([1.0, 0.0], [1.0, 1.0])


def test_descriptor_build_and_ident():
    d = TensorDescriptor.from_dict({"kind": "clifford", "n": 8, "params": {"m": 3}, "seed": 2})
    t = d.build()
    assert t.n == 8 and max_violation(t) <= 1e-12
    assert d.ident.startswith("clifford(n=8")
    with pytest.raises(ValueError):
        TensorDescriptor("bogus", 3).build()
    with pytest.raises(ValueError):
        TensorDescriptor.from_dict({"kind": "constant", "n": 3, "extra": 1})


def test_corpus_expansion_with_epsilons():
    spec = CorpusSpec.from_json_obj({
        "tensors": [{"kind": "complex", "n": 4, "seed": 1}, {"kind": "constant", "n": 3}],
        "epsilons": [0, 0.1],
    })
    entries = spec.resolve()
    assert len(entries) == 4
    np.testing.assert_array_equal(entries[0][1].components, complex_space_form(4, 1, 1, seed=1).components)
    assert not np.array_equal(entries[1][1].components, entries[0][1].components)
    assert len({ident for ident, _ in entries}) == 4
