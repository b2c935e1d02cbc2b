import numpy as np
import pytest

from kdlab import covariance as cv
from kdlab import driver as drv
from kdlab import limit as lim
from kdlab import seeding, spectral, testfn
from kdlab.kinetic import heat_solution


def smooth(nx=32):
    x = spectral.grid(nx)
    return 1 + 0.5 * np.cos(2 * np.pi * x) + 0.2 * np.sin(6 * np.pi * x)


def silent(nx=32):
    return cv.assemble(np.zeros((nx, nx)))


def test_heat_eigenvalues():
    assert np.isclose(lim.eigenvalues_heat(16, 1.0)[1], 4 * np.pi**2)


def test_noiseless_step_is_exact_heat_decay():
    rho0 = smooth()
    run = lim.simulate_limit(rho0, silent(), 1.0, 0.3, 0.1, [np.random.default_rng(0)])
    assert np.allclose(run.rho[0, -1], heat_solution(rho0, 1.0, 0.3), atol=1e-14)
    assert np.all(np.diff(run.l2_sq[0]) <= 0)
    zero = lim.simulate_limit(np.zeros(32), silent(), 1.0, 0.1, 0.01, [np.random.default_rng(0)])
    assert np.all(zero.rho == 0.0)


def test_ito_drift_examples():
    assert np.all(lim.ito_stratonovich_check(silent()) == 0.0)
    assert np.allclose(lim.ito_stratonovich_check(lim.constant_noise_covariance(16, 0.4)), 0.2)
    model = cv.from_driver(drv.make_params(nx=32))
    assert np.allclose(lim.ito_stratonovich_check(model), 0.5 * np.diag(cv.mercer_reconstruct(model)))


def test_lognormal_second_moment():
    rho0, q, T = smooth(), 0.5, 0.5
    cov = lim.constant_noise_covariance(32, q)
    run = lim.simulate_limit(rho0, cov, 1.0, T, 2e-3, seeding.streams(11, "unit", 0, 3000, "limit"))
    v = run.l2_sq[:, -1]
    oracle = lim.lognormal_second_moment(rho0, 1.0, q, T)
    heat = heat_solution(rho0, 1.0, T)
    assert np.isclose(oracle, np.exp(2 * q * T) * spectral.l2_inner(heat, heat))
    assert abs(v.mean() - oracle) < 3 * v.std(ddof=1) / np.sqrt(v.size)


def test_constant_noise_gronwall_rate():
    assert np.isclose(lim.gronwall_constant(lim.constant_noise_covariance(16, 0.3)), 0.6)


def test_moment_growth_check_default_driver():
    cov = cv.from_driver(drv.make_params(nx=32))
    run = lim.simulate_limit(smooth(), cov, 1.0, 0.2, 1e-3, seeding.streams(2, "unit", 0, 256, "limit"))
    assert lim.moment_growth_check(run, cov, 0.2).passed


def test_zeta_is_the_q_wiener_process():
    p = drv.OUParams(1.0, np.array([0.6]), 16)
    cov = cv.from_driver(p)
    run = lim.simulate_limit(np.ones(16), cov, 1.0, 0.4, 0.01, seeding.streams(4, "unit", 0, 4000, "limit"))
    z = run.zeta[:, -1, 3]
    se = np.std(z**2, ddof=1) / np.sqrt(z.size)
    assert abs(np.mean(z**2) - 0.4 * 0.36) < 3 * se
    assert np.all(run.zeta[:, 0] == 0.0)


def test_short_time_rate_matches_limit_generator():
    nx = 32
    p = drv.make_params(J=2, scale=1.0, sin_ratio=0.5, nx=nx)
    cov = cv.from_driver(p)
    x = spectral.grid(nx)
    tf = testfn.TestFunction("quadratic", 1 + np.cos(2 * np.pi * x), "cos", np.sin(2 * np.pi * x))
    rho0 = smooth(nx)
    h, N = 2e-3, 20000
    run = lim.simulate_limit(rho0, cov, 1.0, h, h / 10, seeding.streams(6, "unit", 1, N, "limit"), snapshots=1)
    phi_h = tf(run.rho[:, -1], run.zeta[:, -1])
    phi_0 = tf(rho0, np.zeros(nx))
    rate = (phi_h - phi_0) / h
    gen = testfn.limit_generator(tf, rho0, np.zeros(nx), cov, np.array([[1.0]]))[0]
    assert abs(rate.mean() - gen) < 3 * rate.std(ddof=1) / np.sqrt(N)


def test_limit_requires_consistent_grid():
    with pytest.raises(Exception):
        lim.simulate_limit(np.ones(16), silent(32), 1.0, 0.1, 0.01, [np.random.default_rng(0)])
