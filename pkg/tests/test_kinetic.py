import numpy as np
import pytest
from scipy import linalg

from kdlab import driver as drv
from kdlab import kinetic as kin
from kdlab import seeding, spectral
from kdlab import velocity as vel
from kdlab.stopping import StoppingConfig


def mode(nx, ell=1):
    return np.cos(2 * np.pi * ell * spectral.grid(nx))


def quiet(nx=32):
    return drv.make_params(J=2, scale=0.0, nx=nx)


def test_transport_examples(two, rng):
    f = rng.standard_normal((32, 2))
    still = vel.VelocityModel(np.array([0.5, 0.5]), np.ones(2), np.zeros(2))
    assert np.allclose(kin.transport_substep(f, still, 0.1, 0.1), f)
    g = np.stack([mode(32, 3), mode(32, 5)], axis=1)
    assert np.allclose(kin.transport_substep(g, two, 0.1, 0.1), g, atol=1e-12)
    out = kin.transport_substep(g, two, 0.037, 0.1)
    amp = np.abs(np.fft.fft(out, axis=0))
    assert np.allclose(amp[3, 0], 16.0, atol=1e-13) and np.allclose(amp[5, 1], 16.0, atol=1e-13)


def test_relaxation_examples(two, rng):
    eq = vel.equilibrium_field(two, 1 + mode(16))
    assert np.allclose(kin.relaxation_substep(eq, two, 0.3, 0.5), eq)
    f = rng.random((16, 2))
    rhoM = vel.equilibrium_field(two, vel.density(two, f))
    out = kin.relaxation_substep(f, two, np.log(2.0) * 0.01, 0.1)
    assert np.allclose(out - rhoM, 0.5 * (f - rhoM), atol=1e-14)
    assert np.allclose(vel.density(two, out), vel.density(two, f), atol=1e-14)


def test_relaxation_matches_matrix_exponential(rng):
    model = vel.hermite(5)
    f = rng.random((16, 5))
    L = np.outer(model.equilibrium, model.weights) - np.eye(5)
    ref = f @ linalg.expm(0.7 * L).T
    assert np.allclose(kin.relaxation_substep(f, model, 0.7 * 0.04, 0.2), ref, atol=1e-12)


def test_noise_substep_examples(rng):
    f = rng.random((16, 2)) + 0.1
    assert np.allclose(kin.noise_substep(f, np.zeros(16), 0.01, 0.1), f)
    out = kin.noise_substep(f, np.full(16, -3.0), 0.01, 0.1)
    assert np.allclose(out, f * np.exp(-0.3))
    big = kin.noise_substep(f, 50 * rng.standard_normal(16), 0.01, 0.1)
    assert np.all(big > 0)


def test_solver_config():
    cfg = kin.SolverConfig(eps=0.1, T=0.5, c_dt=0.25)
    assert cfg.n_steps == 200 and np.isclose(cfg.dt, 0.0025)
    with pytest.raises(ValueError):
        kin.SolverConfig(eps=0.1, c_dt=0.6)


def test_zero_data_stays_zero(two):
    run = kin.simulate_ensemble(np.zeros((32, 2)), two, quiet(), kin.SolverConfig(eps=0.1, T=0.1, noise=False))
    assert np.all(run.rho_free == 0.0)


def test_noiseless_density_approaches_heat(two):
    rho0 = mode(32)
    f0 = vel.equilibrium_field(two, rho0)
    T = 0.05
    heat = kin.heat_solution(rho0, 1.0, T)
    errs = []
    for eps in (0.1, 0.05, 0.025):
        run = kin.simulate_ensemble(f0, two, quiet(), kin.SolverConfig(eps=eps, T=T, c_dt=0.1, noise=False))
        errs.append(np.linalg.norm(run.rho_free[0, -1] - heat) / np.linalg.norm(heat))
    assert errs[0] > errs[1] > errs[2]


def test_telegraph_oracle():
    assert np.isclose(kin.telegraph_mode(1, 1e-4, 0.1), np.exp(-4 * np.pi**2 * 0.1), rtol=1e-5)
    assert np.isclose(kin.telegraph_mode(2, 0.3, 0.0, 2.0), 2.0)


def test_solver_against_exact_two_velocity_mode(two):
    rho0 = mode(32)
    f0 = vel.equilibrium_field(two, rho0)
    eps, T = 0.1, 0.1
    exact = kin.telegraph_mode(1, eps, T) * rho0
    errs = []
    for c in (0.2, 0.1, 0.05):
        run = kin.simulate_ensemble(f0, two, quiet(), kin.SolverConfig(eps=eps, T=T, c_dt=c, noise=False))
        errs.append(np.linalg.norm(run.rho_free[0, -1] - exact) / np.linalg.norm(exact))
    assert errs[-1] < 1e-4
    assert np.all(np.diff(errs) < 0)


@pytest.mark.parametrize("scheme,order", [("lie", 1.0), ("strang", 2.0)])
def test_self_convergence_order(two, scheme, order):
    x = spectral.grid(32)
    f0 = np.stack([1 + mode(32), 1 + 0.5 * np.sin(2 * np.pi * x)], axis=1)
    finals = []
    for c in (0.1, 0.05, 0.025, 0.0125):
        cfg = kin.SolverConfig(eps=0.1, T=0.1, c_dt=c, scheme=scheme, noise=False)
        finals.append(kin.simulate_ensemble(f0, two, quiet(), cfg).f_final[0])
    d = [np.linalg.norm(finals[i] - finals[i + 1]) for i in range(3)]
    assert abs(np.log2(d[-2] / d[-1]) - order) < 0.2


def test_energy_examples(two):
    f0 = vel.equilibrium_field(two, 1 + 0.5 * mode(32))
    run = kin.simulate_ensemble(f0, two, quiet(), kin.SolverConfig(eps=0.1, T=0.2, noise=False))
    lhs = run.fnorm_sq + run.dissipation
    assert np.all(lhs <= run.f0_norm_sq[:, None] * (1 + 1e-10))
    assert np.all(np.diff(run.fnorm_sq[0]) <= 1e-14)
    assert run.dissipation[0, -1] > 0
    rep = kin.energy_report(run, two, 2.0, 0.2)
    assert rep.passed and rep.applicable and rep.worst_ratio < 1.0
    assert np.isclose(kin.energy_constant(two, 2.0, 0.5), np.exp(12.0))


def test_batching_does_not_change_trajectories(two, params):
    cfg = kin.SolverConfig(eps=0.2, T=0.05)
    f0 = vel.equilibrium_field(two, 1 + 0.5 * mode(64))
    scaled = drv.make_params(scale=1e-4, nx=64)
    together = kin.simulate_ensemble(f0, two, scaled, cfg, seeding.streams(3, "unit", 0, 3))
    alone = kin.simulate_ensemble(f0, two, scaled, cfg, [seeding.stream(3, "unit", 0, 2)])
    assert np.array_equal(together.rho[2], alone.rho[0])
    assert np.allclose(together.e_norm[2], alone.e_norm[0], rtol=1e-12, atol=0)


def test_auxiliary_paths_replay_the_solver(two):
    p = drv.make_params(scale=3e-5, nx=64)
    cfg = kin.SolverConfig(eps=0.2, T=0.1, stopping=StoppingConfig(Lambda=2.0, T=0.1))
    f0 = vel.equilibrium_field(two, np.ones(64))
    run = kin.simulate_ensemble(f0, two, p, cfg, seeding.streams(5, "unit", 1, 16))
    aux = kin.auxiliary_paths(p, cfg, seeding.streams(5, "unit", 1, 16))
    assert np.allclose(run.e_norm, aux.e_norm)
    assert np.allclose(run.zeta_free, aux.zeta)
    assert np.array_equal(run.tau, aux.tau)


def test_stopped_records_are_frozen(two):
    p = drv.make_params(scale=2e-3, nx=64)
    cfg = kin.SolverConfig(eps=0.2, T=0.1)
    f0 = vel.equilibrium_field(two, 1 + 0.5 * mode(64))
    run = kin.simulate_ensemble(f0, two, p, cfg, seeding.streams(9, "unit", 2, 16))
    stopped = np.nonzero(run.tau < 0.1)[0]
    assert stopped.size > 0
    i = stopped[0]
    after = run.snap_times > run.tau[i]
    assert np.allclose(run.rho[i, after], run.rho[i, after][0])
    assert not np.allclose(run.rho_free[i, after], run.rho_free[i, after][0])


def test_noisy_run_needs_generators(two, params):
    with pytest.raises(ValueError):
        kin.simulate_ensemble(np.ones((64, 2)), two, params, kin.SolverConfig(eps=0.1, T=0.01))


def test_single_trajectory_view(two):
    p = drv.make_params(scale=1e-5, nx=64)
    cfg = kin.SolverConfig(eps=0.2, T=0.02, snapshots=4)
    tr = kin.simulate_trajectory(np.ones((64, 2)), two, p, cfg, seeding.stream(1, "unit"), seed="s")
    assert tr.rho.shape == (tr.snap_times.size, 64) and tr.seed == "s"
    assert np.isinf(tr.tau)
