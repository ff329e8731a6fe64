"""Parameter sets: operators, drifts, jump measures, admissibility, I/O."""

import numpy as np
import pytest

from affinecone import (
    AdmissibilityError,
    AffineParams,
    LinearDrift,
    MatrixJumpMeasure,
    ScalarJumpMeasure,
    SymOperator,
    inner,
    is_subdominant_psd,
    load_params,
    random_psd,
    sym_dim,
    symmetrize,
)


def _random_params(d, rng, kind="lyapunov"):
    alpha = random_psd(d, rng)
    b = (d - 1) * alpha + random_psd(d, rng)
    if kind == "lyapunov":
        drift = LinearDrift.lyapunov(-np.eye(d) + 0.2 * rng.standard_normal((d, d)))
    elif kind == "congruence":
        drift = LinearDrift.congruence(0.5 * rng.standard_normal((d, d)))
    else:
        drift = LinearDrift.general(
            LinearDrift.lyapunov(-np.eye(d)).operator(d).matrix
        )
    return AffineParams(dim=d, alpha=alpha, b=b, drift=drift)


# --- SymOperator ---------------------------------------------------------


def test_operator_from_map_reproduces_map(rng):
    d = 3
    beta = rng.standard_normal((d, d))
    drift = LinearDrift.lyapunov(beta)
    op = drift.operator(d)
    assert op.matrix.shape == (sym_dim(d), sym_dim(d))
    for _ in range(10):
        x = symmetrize(rng.standard_normal((d, d)))
        assert np.allclose(op.apply(x), drift.apply(x), atol=1e-12)


def test_operator_adjoint_identity(rng):
    # <A(x), y> == <x, A*(y)> in the trace inner product
    d = 3
    for kind in ("lyapunov", "congruence"):
        beta = rng.standard_normal((d, d))
        drift = LinearDrift(kind, beta=beta)
        op = drift.operator(d)
        for _ in range(10):
            x = symmetrize(rng.standard_normal((d, d)))
            y = symmetrize(rng.standard_normal((d, d)))
            lhs = inner(op.apply(x), y)
            rhs = inner(x, op.adjoint().apply(y))
            assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


def test_drift_adjoint_apply_closed_forms(rng):
    d = 3
    for kind in ("lyapunov", "congruence"):
        beta = rng.standard_normal((d, d))
        drift = LinearDrift(kind, beta=beta)
        op_adj = drift.operator(d).adjoint()
        u = symmetrize(rng.standard_normal((d, d)))
        assert np.allclose(drift.adjoint_apply(u), op_adj.apply(u), atol=1e-12)


def test_operator_expm_is_semigroup(rng):
    d = 2
    op = LinearDrift.lyapunov(-np.eye(d) + 0.1 * rng.standard_normal((d, d))).operator(d)
    a = op.expm(0.7).matrix @ op.expm(0.3).matrix
    assert np.allclose(a, op.expm(1.0).matrix, atol=1e-12)


def test_operator_shape_mismatch():
    with pytest.raises(ValueError):
        SymOperator(2, np.eye(4))


# --- drift kinds ---------------------------------------------------------


def test_drift_requires_matching_payload():
    with pytest.raises(ValueError):
        LinearDrift("lyapunov")
    with pytest.raises(ValueError):
        LinearDrift("general")
    with pytest.raises(ValueError):
        LinearDrift("spectral", beta=np.eye(2))


def test_general_drift_roundtrip(rng):
    d = 2
    beta = rng.standard_normal((d, d))
    lyap = LinearDrift.lyapunov(beta)
    gen = LinearDrift.general(lyap.operator(d).matrix)
    x = symmetrize(rng.standard_normal((d, d)))
    assert np.allclose(gen.apply(x), lyap.apply(x), atol=1e-12)
    assert np.allclose(gen.adjoint_apply(x), lyap.adjoint_apply(x), atol=1e-12)


# --- jump measures -------------------------------------------------------


def test_scalar_jump_measure_moments():
    site1 = np.diag([0.5, 0.0])
    site2 = np.diag([3.0, 4.0])  # norm 5 > 1
    m = ScalarJumpMeasure([(site1, 2.0), (site2, 0.25)])
    assert m.total_rate() == pytest.approx(2.25)
    assert np.allclose(m.first_moment(2), 2.0 * site1 + 0.25 * site2)
    assert m.log_moment() == pytest.approx(0.25 * np.log(5.0))


def test_scalar_jump_measure_log_moment_strict_threshold():
    # a site of norm exactly 1 does not contribute
    m = ScalarJumpMeasure([(np.diag([1.0, 0.0]), 3.0)])
    assert m.log_moment() == 0.0


def test_scalar_jump_measure_rejects_bad_atoms():
    with pytest.raises(ValueError):
        ScalarJumpMeasure([(np.zeros((2, 2)), 1.0)])
    with pytest.raises(ValueError):
        ScalarJumpMeasure([(np.eye(2), -1.0)])
    with pytest.raises(ValueError):
        ScalarJumpMeasure([(np.diag([1.0, -1.0]), 1.0)])


def test_matrix_jump_measure_rejects_bad_atoms():
    with pytest.raises(ValueError):
        MatrixJumpMeasure([(np.eye(2), np.diag([1.0, -1.0]))])
    with pytest.raises(ValueError):
        MatrixJumpMeasure([(np.zeros((2, 2)), np.eye(2))])


# --- admissibility -------------------------------------------------------


def test_validate_passes_for_admissible(rng):
    for kind in ("lyapunov", "congruence", "general"):
        report = _random_params(3, rng, kind).validate()
        assert report.passed, report.failures()


def test_validate_flags_indefinite_diffusion(rng):
    p = _random_params(2, rng)
    p.alpha = np.diag([1.0, -0.5])
    report = p.validate()
    assert "diffusion_psd" in report.failures()


def test_validate_flags_small_constant_drift():
    d = 3
    p = AffineParams(
        dim=d, alpha=np.eye(d), b=np.eye(d), drift=LinearDrift.lyapunov(-np.eye(d))
    )
    # b = I < (d-1) alpha = 2I
    report = p.validate()
    assert "constant_drift_dominates" in report.failures()


def test_validate_flags_outward_general_drift():
    # x -> -x pushes boundary states out of the cone along orthogonal
    # directions: <-x, u> < 0 fails for no pair, so use a reflection
    d = 2
    refl = np.zeros((sym_dim(d), sym_dim(d)))
    refl[0, 1] = refl[1, 0] = -1.0  # swaps and negates the diagonal units
    p = AffineParams(
        dim=d, alpha=np.zeros((d, d)), b=np.zeros((d, d)), drift=LinearDrift.general(refl)
    )
    report = p.validate()
    assert "linear_drift_inward" in report.failures()
    assert report.clauses["linear_drift_inward"].sampled


def test_validate_general_drift_pass_is_marked_sampled(rng):
    p = _random_params(2, rng, "general")
    clause = p.validate().clauses["linear_drift_inward"]
    assert clause.passed and clause.sampled


def test_structured_drift_pass_is_analytic(rng):
    p = _random_params(2, rng, "lyapunov")
    clause = p.validate().clauses["linear_drift_inward"]
    assert clause.passed and not clause.sampled


# --- effective drift -----------------------------------------------------


def test_effective_drift_adds_jump_linearization(rng):
    d = 2
    p = _random_params(d, rng)
    site = random_psd(d, rng) + 0.1 * np.eye(d)
    weight = random_psd(d, rng)
    p.mu = MatrixJumpMeasure([(site, weight)])
    op = p.effective_drift()
    for _ in range(5):
        u = symmetrize(rng.standard_normal((d, d)))
        expect = p.drift.apply(u) + inner(u, weight) * site
        assert np.allclose(op.apply(u), expect, atol=1e-12)


def test_effective_drift_eigenvalues_pair_sums(rng):
    # for drift x -> beta x + x beta.T the operator spectrum is
    # { lam_i + lam_j : i <= j } over the eigenvalues of beta
    d = 3
    beta = rng.standard_normal((d, d))
    p = AffineParams(
        dim=d, alpha=np.zeros((d, d)), b=np.zeros((d, d)), drift=LinearDrift.lyapunov(beta)
    )
    lam = np.linalg.eigvals(beta)
    expect = sorted(
        (lam[i] + lam[j] for i in range(d) for j in range(i, d)),
        key=lambda z: (z.real, z.imag),
    )
    got = sorted(p.effective_drift().eigenvalues(), key=lambda z: (z.real, z.imag))
    assert np.allclose(got, expect, atol=1e-9)


# --- serialization -------------------------------------------------------


def test_json_roundtrip(tmp_path, rng):
    d = 2
    p = _random_params(d, rng)
    p.m = ScalarJumpMeasure([(np.diag([0.3, 0.1]), 0.5)])
    p.mu = MatrixJumpMeasure([(np.eye(d), 0.05 * np.eye(d))])
    path = tmp_path / "model.json"
    p.save(path)
    q = load_params(path)
    assert q.dim == p.dim
    assert np.allclose(q.alpha, p.alpha)
    assert np.allclose(q.b, p.b)
    assert q.drift.kind == p.drift.kind
    assert np.allclose(q.drift.beta, p.drift.beta)
    assert len(q.m) == 1 and len(q.mu) == 1
    assert np.allclose(q.m.atoms[0][0], p.m.atoms[0][0])


def test_load_params_rejects_inadmissible(tmp_path):
    d = 2
    p = AffineParams(
        dim=d, alpha=np.eye(d), b=np.zeros((d, d)), drift=LinearDrift.lyapunov(-np.eye(d))
    )
    path = tmp_path / "bad.json"
    p.save(path)
    with pytest.raises(AdmissibilityError):
        load_params(path)
    q = load_params(path, force=True)
    assert not q.validate().passed


def test_is_subdominant_psd():
    assert is_subdominant_psd(np.eye(2), 2 * np.eye(2))
    assert not is_subdominant_psd(2 * np.eye(2), np.eye(2))
    assert is_subdominant_psd(np.eye(2), np.eye(2))
