"""Monte Carlo simulation: schemes, reproducibility, statistical checks."""

import numpy as np
import pytest

from affinecone import (
    AffineParams,
    LinearDrift,
    MatrixJumpMeasure,
    ScalarJumpMeasure,
    SimConfig,
    ergodic_sweep,
    mc_mean,
    mc_vs_formula,
    simulate,
    transient_mean,
)
from conftest import zero_diffusion_params


def _diffusion_config(n_paths=512, dt=0.01, seed=11, horizon=1.0, with_mu=False):
    d = 2
    sigma = np.array([[0.5, 0.1], [0.0, 0.4]])
    alpha = sigma.T @ sigma
    m = ScalarJumpMeasure([(np.diag([0.3, 0.1]), 0.5)])
    mu = MatrixJumpMeasure()
    if with_mu:
        mu = MatrixJumpMeasure([(np.diag([0.4, 0.4]), 0.3 * np.eye(d))])
    p = AffineParams(
        dim=d,
        alpha=alpha,
        b=(d - 1) * alpha + 0.3 * np.eye(d),
        drift=LinearDrift.lyapunov(-0.8 * np.eye(d)),
        m=m,
        mu=mu,
    )
    return SimConfig(
        params=p,
        sigma=sigma,
        x0=0.5 * np.eye(d),
        horizon=horizon,
        dt=dt,
        n_paths=n_paths,
        seed=seed,
    )


def _jump_config(n_paths=2048, seed=3):
    p = zero_diffusion_params()
    return SimConfig(
        params=p,
        sigma=np.zeros((2, 2)),
        x0=np.diag([2.0, 0.5]),
        horizon=2.0,
        dt=0.01,
        n_paths=n_paths,
        seed=seed,
        scheme="ou_exact",
    )


# --- configuration validation -------------------------------------------


def test_config_rejects_sigma_alpha_mismatch():
    cfg = _diffusion_config()
    with pytest.raises(ValueError):
        SimConfig(
            params=cfg.params,
            sigma=np.eye(2),
            x0=cfg.x0,
            horizon=1.0,
            dt=0.01,
            n_paths=8,
            seed=0,
        )


def test_config_rejects_exact_scheme_with_diffusion():
    cfg = _diffusion_config()
    with pytest.raises(ValueError):
        SimConfig(
            params=cfg.params,
            sigma=cfg.sigma,
            x0=cfg.x0,
            horizon=1.0,
            dt=0.01,
            n_paths=8,
            seed=0,
            scheme="ou_exact",
        )


def test_config_rejects_unknown_scheme():
    cfg = _diffusion_config()
    with pytest.raises(ValueError):
        SimConfig(
            params=cfg.params,
            sigma=cfg.sigma,
            x0=cfg.x0,
            horizon=1.0,
            dt=0.01,
            n_paths=8,
            seed=0,
            scheme="milstein",
        )


def test_simulate_rejects_off_grid_snapshot():
    cfg = _diffusion_config(n_paths=4)
    with pytest.raises(ValueError):
        simulate(cfg, [0.005])
    with pytest.raises(ValueError):
        simulate(cfg, [2.0])  # beyond the horizon


# --- reproducibility -----------------------------------------------------


def test_bit_identical_reruns():
    cfg = _diffusion_config(n_paths=600)
    a = simulate(cfg, [0.5, 1.0])
    b = simulate(cfg, [0.5, 1.0])
    assert np.array_equal(a.states, b.states)
    assert a.jump_log == b.jump_log


def test_bit_identical_across_thread_counts():
    cfg = _diffusion_config(n_paths=1200)
    one = simulate(cfg, [1.0], threads=1)
    four = simulate(cfg, [1.0], threads=4)
    assert np.array_equal(one.states, four.states)
    assert one.jump_log == four.jump_log


def test_seed_changes_output():
    a = simulate(_diffusion_config(seed=1, n_paths=64), [1.0])
    b = simulate(_diffusion_config(seed=2, n_paths=64), [1.0])
    assert not np.array_equal(a.states, b.states)


def test_path_count_extension_is_consistent():
    # the first paths of a larger ensemble replicate the smaller one
    small = simulate(_diffusion_config(n_paths=100), [1.0])
    large = simulate(_diffusion_config(n_paths=300), [1.0])
    assert np.array_equal(small.states, large.states[:, :100])


# --- statistical agreement ----------------------------------------------


def test_exact_scheme_matches_transient_mean():
    cfg = _jump_config(n_paths=4096)
    ens = simulate(cfg, [0.5, 2.0], threads=2)
    for t in (0.5, 2.0):
        z = mc_vs_formula(ens, cfg.params, t)
        assert np.all(np.abs(z) < 4.0)


def test_euler_scheme_matches_transient_mean():
    cfg = _diffusion_config(n_paths=4096, dt=0.002)
    ens = simulate(cfg, [1.0], threads=2)
    z = mc_vs_formula(ens, cfg.params, 1.0)
    assert np.all(np.abs(z) < 4.0)


def test_state_dependent_jumps_shift_the_mean():
    # the thinned state-dependent jumps must reproduce the linearized
    # drift correction that enters the analytic mean
    cfg = _diffusion_config(n_paths=4096, dt=0.002, with_mu=True)
    ens = simulate(cfg, [1.0], threads=2)
    z = mc_vs_formula(ens, cfg.params, 1.0)
    assert np.all(np.abs(z) < 4.0)
    # dropping the correction from the analytic side must break agreement
    stripped = AffineParams(
        dim=2,
        alpha=cfg.params.alpha,
        b=cfg.params.b,
        drift=cfg.params.drift,
        m=cfg.params.m,
    )
    mean, stderr = mc_mean(ens, 1.0)
    wrong = transient_mean(stripped, cfg.x0, 1.0)
    ok = stderr > 0
    assert np.max(np.abs(mean - wrong)[ok] / stderr[ok]) > 4.0


def test_mc_mean_stderr_shrinks():
    a = simulate(_jump_config(n_paths=512), [2.0])
    b = simulate(_jump_config(n_paths=4096), [2.0])
    _, sa = mc_mean(a, 2.0)
    _, sb = mc_mean(b, 2.0)
    assert np.linalg.norm(sb) / np.linalg.norm(sa) < 0.6


def test_states_stay_in_cone():
    cfg = _diffusion_config(n_paths=256)
    ens = simulate(cfg, [0.5, 1.0])
    w = np.linalg.eigvalsh(ens.states)
    assert w.min() >= -1e-12


def test_jump_log_and_csv_output(tmp_path):
    cfg = _jump_config(n_paths=64)
    ens = simulate(cfg, [1.0, 2.0])
    assert any(len(log) for log in ens.jump_log)
    for t, source, idx in ens.jump_log[0]:
        assert 0.0 <= t <= 2.0 and source == "m" and idx == 0
    snap = tmp_path / "snap.csv"
    jumps = tmp_path / "jumps.csv"
    ens.snapshots_to_csv(snap)
    ens.jumps_to_csv(jumps)
    data = np.loadtxt(snap, delimiter=",", skiprows=1)
    assert data.shape == (2 * 64, 2 + 3)
    assert jumps.read_text().startswith("path_id,time,source,atom_index")


def test_ergodic_sweep_reports_w1_columns():
    cfg = _jump_config(n_paths=256)
    rows = ergodic_sweep(cfg.params, cfg.x0, [1.0, 2.0], cfg, threads=2)
    assert len(rows) == 2
    for row in rows:
        assert row["w1_ok"]
        assert row["w1_gap"] <= row["w1_bound"] + 1e-9
        assert row["mc_gap_to_transient"] < 10 * max(row["stderr_norm"], 1e-3)
