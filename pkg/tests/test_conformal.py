import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelift.conformal import (
    DenominatorError,
    PoleError,
    Status,
    conformal_to_lorentz,
    gen_dilation,
    gen_inversion,
    gen_rotation,
    gen_translation,
    mobius_apply,
    mobius_conformal_factor,
    random_conformal,
    random_orthogonal,
    stereo_project,
    stereo_unproject,
)
from conelift.fixtures import nonconformal_pairs, random_sphere_points
from conelift.lorentz import lorentz_check, lorentz_inverse


def test_stereo_examples():
    np.testing.assert_allclose(stereo_project([0.0, 1.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(stereo_project([-1.0, 0.0, 0.0]), [0.0, 0.0])
    with pytest.raises(PoleError):
        stereo_project([1.0, 0.0, 0.0])
    np.testing.assert_allclose(stereo_unproject([0.0, 0.0]), [-1.0, 0.0, 0.0])
    np.testing.assert_allclose(stereo_unproject([2.0, 0.0]), [0.6, 0.8, 0.0])
    np.testing.assert_allclose(stereo_unproject([1.0, 0.0]), [0.0, 1.0, 0.0])


def test_stereo_round_trip():
    w = np.random.default_rng(0).normal(size=(50, 3)) * 3
    np.testing.assert_allclose(stereo_project(stereo_unproject(w)), w, rtol=1e-12, atol=1e-12)


def test_mobius_examples():
    z = random_sphere_points(np.random.default_rng(1), 5, 3)
    np.testing.assert_allclose(mobius_apply(np.eye(4), z), z)
    D = gen_dilation(2.0, 3)
    np.testing.assert_allclose(mobius_apply(D, [0.0, 1.0, 0.0]), [0.6, 0.8, 0.0], atol=1e-15)
    np.testing.assert_allclose(mobius_apply(D, [1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])


def test_conformal_factor_examples():
    assert mobius_conformal_factor(np.eye(4), [0.0, 1.0, 0.0]) == 1.0
    D = gen_dilation(2.0, 3)
    assert mobius_conformal_factor(D, [1.0, 0.0, 0.0]) == pytest.approx(0.5)
    assert mobius_conformal_factor(D, [-1.0, 0.0, 0.0]) == pytest.approx(2.0)


def _tangent_stretch(M, z, h=1e-5):
    # FD singular values of the sphere map on an orthonormal tangent basis at z
    n = z.size
    basis = np.linalg.svd(z[None, :])[2][1:]
    cols = []
    for e in basis:
        zp = np.cos(h) * z + np.sin(h) * e
        zm = np.cos(h) * z - np.sin(h) * e
        cols.append((mobius_apply(M, zp) - mobius_apply(M, zm)) / (2 * h))
    return np.linalg.svd(np.array(cols).T, compute_uv=False)


@pytest.mark.parametrize("z", [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
def test_conformal_factor_matches_fd_stretch(z):
    D = gen_dilation(2.0, 3)
    sv = _tangent_stretch(D, np.array(z))
    np.testing.assert_allclose(sv, mobius_conformal_factor(D, z), rtol=1e-8)


def test_denominator_guard():
    with pytest.raises(DenominatorError):
        mobius_apply(-np.eye(3), [0.0, 1.0])


def test_dilation_examples():
    np.testing.assert_array_equal(gen_dilation(1.0, 4), np.eye(5))
    M = gen_dilation(2.0, 4)
    assert M[0, 0] == 1.25 and M[0, 1] == 0.75 and M[1, 0] == 0.75 and M[1, 1] == 1.25
    with pytest.raises(ValueError):
        gen_dilation(0.0, 3)


def test_dilation_minus_one_is_point_reflection():
    M = gen_dilation(-1.0, 3)
    assert lorentz_check(M).passed
    w = np.array([[0.3, -1.2], [2.0, 0.5]])
    np.testing.assert_allclose(stereo_project(mobius_apply(M, stereo_unproject(w))), -w, atol=1e-14)


def test_rotation_examples():
    np.testing.assert_array_equal(gen_rotation(np.eye(2)), np.eye(4))
    B = np.array([[0.0, -1.0], [1.0, 0.0]])
    expected = np.eye(4)
    expected[2:, 2:] = B
    np.testing.assert_array_equal(gen_rotation(B), expected)
    R = gen_rotation(np.diag([-1.0, 1.0]))
    assert lorentz_check(R).passed and lorentz_check(R).det_sign == -1
    with pytest.raises(ValueError):
        gen_rotation(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_inversion_examples():
    M = gen_inversion(np.zeros(2))
    np.testing.assert_array_equal(M, np.diag([1.0, -1.0, 1.0, 1.0]))
    np.testing.assert_allclose(mobius_apply(M, [0.6, 0.8, 0.0]), [-0.6, 0.8, 0.0])
    M = gen_inversion([1.0, 0.0])
    assert M[0, 0] == 1.5
    np.testing.assert_array_equal(M[0, 1:], [-0.5, -1.0, 0.0])
    np.testing.assert_array_equal(M[1:, 0], [-0.5, -1.0, 0.0])
    np.testing.assert_array_equal(M[1, 1:], [-0.5, 1.0, 0.0])


def test_translation_examples():
    np.testing.assert_array_equal(gen_translation(np.zeros(3)), np.eye(5))
    M = gen_translation([1.0, 0.0])
    assert M[0, 0] == 1.5
    np.testing.assert_array_equal(M[0, 1:], [-0.5, 1.0, 0.0])
    np.testing.assert_array_equal(M[1:, 0], [0.5, 1.0, 0.0])
    rng = np.random.default_rng(3)
    for _ in range(5):
        b = rng.normal(size=3) * 2
        np.testing.assert_allclose(mobius_apply(gen_translation(b), [1.0, 0, 0, 0]), [1.0, 0, 0, 0], atol=1e-14)


def _plane(M, w):
    return stereo_project(mobius_apply(M, stereo_unproject(w)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([3, 4, 5, 8]))
def test_plane_semantics(seed, n):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(6, n - 1))
    lam = rng.choice([-1, 1]) * np.exp(rng.uniform(np.log(0.25), np.log(4)))
    np.testing.assert_allclose(_plane(gen_dilation(lam, n), w), lam * w, rtol=1e-10, atol=1e-10)
    B = random_orthogonal(n - 1, rng)
    np.testing.assert_allclose(_plane(gen_rotation(B), w), w @ B.T, rtol=1e-10, atol=1e-10)
    b = rng.uniform(-2, 2, n - 1)
    np.testing.assert_allclose(_plane(gen_translation(b), w), w + b, rtol=1e-10, atol=1e-10)
    w0 = rng.uniform(-2, 2, n - 1)
    d = w - w0
    np.testing.assert_allclose(_plane(gen_inversion(w0), w), d / np.sum(d * d, axis=1, keepdims=True), rtol=1e-8, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([3, 4, 5]))
def test_induced_map_is_conformal(seed, n):
    M = random_conformal(seed, 3, 2.0, n)
    z = random_sphere_points(np.random.default_rng(seed), 1, n)[0]
    sv = _tangent_stretch(M, z)
    np.testing.assert_allclose(sv, mobius_conformal_factor(M, z), rtol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([3, 4, 5, 8]))
def test_homomorphism_kernel_and_positivity(seed, n):
    M1 = random_conformal(seed, 3, 2.0, n)
    M2 = random_conformal(seed + 1, 3, 2.0, n)
    z = random_sphere_points(np.random.default_rng(seed), 20, n)
    np.testing.assert_allclose(mobius_apply(M1 @ M2, z), mobius_apply(M1, mobius_apply(M2, z)), atol=1e-10)
    # u^T z + a > 0 on the whole sphere: a > |u|
    a, u = M1[0, 0], M1[0, 1:]
    assert a > np.linalg.norm(u)
    # a map acting trivially on generic points is the identity matrix
    np.testing.assert_allclose(mobius_apply(lorentz_inverse(M1) @ M1, z), z, atol=1e-10)


def test_random_conformal_examples():
    np.testing.assert_array_equal(random_conformal(3, 0, 2.0, 4), np.eye(5))
    np.testing.assert_array_equal(random_conformal(9, 8, 2.0, 4), random_conformal(9, 8, 2.0, 4))
    assert lorentz_check(random_conformal(42, 8, 2.0, 3), 1e-12).passed
    with pytest.raises(ValueError):
        random_conformal(1, -1, 2.0, 3)


def test_fit_identity():
    z = random_sphere_points(np.random.default_rng(4), 4, 3)
    fit = conformal_to_lorentz(z, z)
    assert fit.status == Status.UNIQUE
    np.testing.assert_allclose(fit.lorentz, np.eye(4), atol=1e-10)
    assert fit.residual <= 1e-10


def test_fit_dilation():
    z = random_sphere_points(np.random.default_rng(5), 12, 3)
    D = gen_dilation(2.0, 3)
    fit = conformal_to_lorentz(z, mobius_apply(D, z))
    assert fit.status == Status.UNIQUE and fit.route == "nullspace"
    np.testing.assert_allclose(fit.lorentz, D, atol=1e-8)


def test_fit_nonconformal_inconsistent():
    z, zt = nonconformal_pairs(0, 3)
    assert conformal_to_lorentz(z, zt).status == Status.INCONSISTENT


def test_fit_too_few_pairs():
    z = random_sphere_points(np.random.default_rng(6), 3, 3)
    assert conformal_to_lorentz(z, z).status == Status.UNDERDETERMINED


@pytest.mark.parametrize("n", [3, 4, 5])
def test_fit_minimal_pairs_gram_route(n):
    M = random_conformal(11, 4, 2.0, n)
    z = random_sphere_points(np.random.default_rng(n), n + 1, n)
    fit = conformal_to_lorentz(z, mobius_apply(M, z))
    assert fit.status == Status.UNIQUE and fit.route == "gram"
    np.testing.assert_allclose(fit.lorentz, M, atol=1e-8)


def test_fit_equivariance():
    # fitting (sigma z, sigma zt) gives sigma M sigma^-1
    rng = np.random.default_rng(8)
    M = random_conformal(21, 4, 2.0, 3)
    S = random_conformal(22, 2, 2.0, 3)
    z = random_sphere_points(rng, 10, 3)
    zt = mobius_apply(M, z)
    fit = conformal_to_lorentz(mobius_apply(S, z), mobius_apply(S, zt))
    np.testing.assert_allclose(fit.lorentz, S @ M @ lorentz_inverse(S), atol=1e-7)
