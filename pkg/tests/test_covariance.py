import numpy as np
import pytest

from kdlab import covariance as cv
from kdlab import driver as drv
from kdlab import spectral


def test_mc_kernel_of_silent_driver_is_zero(rng):
    p = drv.make_params(J=2, scale=0.0, nx=16)
    est = cv.estimate_kernel_mc(p, 14.0, 100, rng, dt=0.05)
    assert np.all(est.kernel == 0.0)


def test_mc_kernel_single_mode(rng):
    p = drv.OUParams(1.5, np.array([0.8]), 16)
    est = cv.estimate_kernel_mc(p, 14.0 / 1.5, 2000, rng, dt=0.02)
    exact = 0.64 / 1.5**2
    assert abs(est.kernel[0, 0] - exact) < 3 * est.se[0, 0]
    assert np.allclose(est.kernel, est.kernel[0, 0])


def test_mc_kernel_default_driver_within_3se(params, rng):
    est = cv.estimate_kernel_mc(params, 14.0, 2000, rng)
    z = (est.kernel - drv.analytic_kernel(params)) / est.se
    assert np.max(np.abs(z)) < 4.0
    assert np.mean(np.abs(z) < 3) > 0.95


def test_two_sided_estimator_agrees(params, rng):
    est = cv.estimate_kernel_mc(params, 14.0, 1000, rng, two_sided=True)
    z = (est.kernel - drv.analytic_kernel(params)) / est.se
    assert np.mean(np.abs(z) < 3) > 0.95


def test_mc_asymmetry_shrinks_with_samples(params):
    def asym(S, seed):
        est = cv.estimate_kernel_mc(params, 14.0, S, np.random.default_rng(seed), dt=0.05)
        return np.max(np.abs(est.kernel - est.kernel.T))
    small = np.mean([asym(100, s) for s in range(4)])
    large = np.mean([asym(1600, s) for s in range(4)])
    assert large < 0.5 * small


def test_mc_warns_on_short_horizon(params, rng):
    with pytest.warns(UserWarning):
        cv.estimate_kernel_mc(params, 2.0, 100, rng, dt=0.1)


def test_rank_one_kernel():
    x = spectral.grid(32)
    phi = np.sqrt(2) * np.sin(2 * np.pi * x)
    model = cv.assemble(3.0 * np.outer(phi, phi))
    assert np.isclose(model.eigenvalues[0], 3.0)
    assert np.allclose(model.eigenvalues[1:], 0.0, atol=1e-12)
    assert np.allclose(np.abs(model.eigenfields[0]), np.abs(phi))
    assert np.allclose(cv.mercer_reconstruct(model, 1), model.kernel, atol=1e-12)


def test_ou_kernel_eigenvalues(params):
    model = cv.from_driver(params)
    expect = np.sort(params.sigma**2 / params.theta**2)[::-1]
    assert np.allclose(model.eigenvalues[: params.n_modes], expect)
    assert np.allclose(model.eigenvalues[params.n_modes:], 0.0, atol=1e-13)


def test_negative_kernel_rejected():
    with pytest.raises(cv.CovarianceError):
        cv.assemble(-np.eye(8))


def test_reconstruction_and_F(params):
    model = cv.from_driver(params)
    rec = cv.mercer_reconstruct(model)
    assert np.max(np.abs(rec - model.kernel)) < 1e-8
    assert np.allclose(np.diag(rec), model.F)
    assert np.isclose(model.trace, model.F.mean())


def test_c1_summability():
    silent = cv.from_driver(drv.make_params(J=2, scale=0.0, nx=16))
    assert cv.c1_summability_report(silent)[-1] == 0.0
    single = cv.from_driver(drv.OUParams(1.0, np.array([0.5]), 16))
    part = cv.c1_summability_report(single)
    assert np.isclose(part[-1], 0.25)
    assert cv.saturation_index(part) == 1
    p = drv.make_params(J=4, sin_ratio=0.5, nx=64)
    assert cv.saturation_index(cv.c1_summability_report(cv.from_driver(p))) == 9


def test_two_term_identity(params, rng):
    t1, t2, se = cv.two_term_identity(params, 20000, rng)
    z = (t1 + t2 - drv.analytic_kernel(params)) / se
    assert np.mean(np.abs(z) < 3) > 0.95


def test_apply_matches_quadrature(params, rng):
    model = cv.from_driver(params)
    g = rng.standard_normal(params.nx)
    assert np.allclose(model.apply(g), model.kernel @ g / params.nx)
