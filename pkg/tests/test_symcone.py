"""Cone primitives: symmetrization, vectorization, square roots, projection."""

import numpy as np
import pytest
import scipy.linalg

from affinecone import (
    ConeViolationError,
    check_cone,
    frobenius,
    inner,
    is_psd,
    mat_exp,
    min_eigval,
    project_psd,
    psd_tol,
    random_psd,
    sqrt_psd,
    sym_basis,
    sym_dim,
    symmetrize,
    trace_norm_bracket,
    unvectorize,
    vectorize,
)


def test_symmetrize_output_is_symmetric(rng):
    a = rng.standard_normal((4, 4))
    s = symmetrize(a)
    assert np.array_equal(s, s.T)
    assert np.allclose(s, (a + a.T) / 2.0)


def test_symmetrize_rejects_nonsquare():
    with pytest.raises(ValueError):
        symmetrize(np.zeros((2, 3)))


def test_inner_is_trace_product(rng):
    x = symmetrize(rng.standard_normal((3, 3)))
    y = symmetrize(rng.standard_normal((3, 3)))
    assert inner(x, y) == pytest.approx(np.trace(x @ y), abs=1e-12)


def test_vectorize_isometry(rng):
    # the flattening must preserve the trace inner product exactly
    for d in (1, 2, 3, 5):
        x = symmetrize(rng.standard_normal((d, d)))
        y = symmetrize(rng.standard_normal((d, d)))
        vx, vy = vectorize(x), vectorize(y)
        assert vx.shape == (sym_dim(d),)
        assert float(vx @ vy) == pytest.approx(inner(x, y), rel=1e-13, abs=1e-13)
        assert np.allclose(unvectorize(vx), x, atol=1e-14)


def test_sym_basis_orthonormal():
    for d in (2, 3):
        basis = sym_basis(d)
        assert len(basis) == sym_dim(d)
        for i, e in enumerate(basis):
            for j, f in enumerate(basis):
                assert inner(e, f) == pytest.approx(1.0 if i == j else 0.0, abs=1e-14)


def test_sqrt_psd_squares_back(rng):
    for d in (2, 3, 5):
        x = random_psd(d, rng)
        s = sqrt_psd(x)
        assert is_psd(s)
        assert frobenius(s @ s - x) < 1e-12 * max(1.0, frobenius(x))


def test_sqrt_psd_rejects_indefinite():
    with pytest.raises(ConeViolationError):
        sqrt_psd(np.diag([1.0, -0.5]))


def test_project_psd_identity_on_cone(rng):
    x = random_psd(3, rng)
    assert np.allclose(project_psd(x), x, atol=1e-13)


def test_project_psd_idempotent_and_nearest(rng):
    a = symmetrize(rng.standard_normal((3, 3)))
    p = project_psd(a)
    assert is_psd(p)
    assert np.allclose(project_psd(p), p, atol=1e-12)
    # eigenvalue clipping is the Frobenius-nearest cone point
    w, q = np.linalg.eigh(a)
    ref = (q * np.clip(w, 0.0, None)) @ q.T
    assert np.allclose(p, ref, atol=1e-12)


def test_trace_norm_bracket_on_random_psd(rng):
    for d in (2, 3, 5):
        for _ in range(50):
            x = random_psd(d, rng, scale=10.0 ** rng.uniform(-3, 3))
            lo, hi = trace_norm_bracket(x)
            assert lo and hi
            assert frobenius(x) <= np.trace(x) + 1e-12
            assert np.trace(x) <= np.sqrt(d) * frobenius(x) + 1e-12


def test_mat_exp_matches_eigendecomposition(rng):
    a = symmetrize(rng.standard_normal((4, 4)))
    w, q = np.linalg.eigh(a)
    assert np.allclose(mat_exp(a), (q * np.exp(w)) @ q.T, atol=1e-11)
    b = rng.standard_normal((3, 3))
    assert np.allclose(mat_exp(b), scipy.linalg.expm(b), atol=1e-12)


def test_mat_exp_overflow():
    with pytest.raises(OverflowError):
        mat_exp(np.eye(2) * 1e6)


def test_psd_tol_scales_with_norm():
    assert psd_tol(np.eye(2)) == pytest.approx(1e-10 * np.sqrt(2.0))
    assert psd_tol(1e8 * np.eye(2)) == pytest.approx(1e-10 * 1e8 * np.sqrt(2.0))
    assert psd_tol(np.zeros((2, 2))) == pytest.approx(1e-10)


def test_check_cone_accepts_tiny_negative_and_rejects_real_violation():
    d = np.diag([1.0, -1e-13])
    check_cone(d)
    with pytest.raises(ConeViolationError):
        check_cone(np.diag([1.0, -1e-3]))


def test_min_eigval(rng):
    x = np.diag([3.0, -2.0, 0.5])
    assert min_eigval(x) == pytest.approx(-2.0)


def test_random_psd_is_psd(rng):
    for _ in range(20):
        assert is_psd(random_psd(4, rng))
