import numpy as np
import pytest

from kdlab import covariance as cv
from kdlab import driver as drv
from kdlab import spectral, testfn
from kdlab import velocity as vel

NX = 32


@pytest.fixture
def p():
    return drv.make_params(J=3, scale=1.0, sin_ratio=0.5, nx=NX)


@pytest.fixture
def x():
    return spectral.grid(NX)


def family(x):
    c, s = np.cos(2 * np.pi * x), np.sin(4 * np.pi * x)
    eta = np.cos(2 * np.pi * x) + 0.3 * s
    return [testfn.TestFunction("linear", 1 + c, "one"), testfn.TestFunction("quadratic", c + s, "one"),
            testfn.TestFunction("sin", 1 + s, "cos", eta), testfn.TestFunction("quadratic", 1 + c, "cos", eta),
            testfn.TestFunction("linear", s, "cos", eta)]


def test_phi_examples(x):
    ones = np.ones(NX)
    assert np.isclose(testfn.TestFunction("linear", ones)(2.5 * ones, 0 * ones), 2.5)
    assert np.isclose(testfn.TestFunction("quadratic", np.cos(2 * np.pi * x))(ones, 0 * ones), 0.0)
    tf = testfn.TestFunction("linear", ones, "cos", np.cos(2 * np.pi * x))
    assert np.isclose(tf(ones, 0 * ones), 1.0)
    with pytest.raises(ValueError):
        testfn.TestFunction("cube", ones)


def test_cascade_identities(two, p, x, rng):
    f, z, n = testfn.random_states(two, p, 8, rng)
    cov = cv.from_driver(p)
    for tf in family(x):
        c = testfn.Calculus(two, p, tf)
        S = c.state(f, z, n)
        L = testfn.limit_generator(tf, S.rho, S.z, cov, np.array([[1.0]]))
        scale = np.abs(c.L1(c.phi1, S)) + np.abs(L) + 1e-12
        assert np.all(np.abs(c.L2(c.phi, S)) / scale < 1e-10)
        assert np.all(np.abs(c.L1(c.phi, S) + c.L2(c.phi1, S)) / scale < 1e-10)
        assert np.all(np.abs(c.L1(c.phi1, S) + c.L2(c.phi2, S) - L) / scale < 1e-10)
        assert np.allclose(c.value(c.limit, S), L)


def test_cascade_on_hermite_model(p, x, rng):
    model = vel.hermite(6)
    f, z, n = testfn.random_states(model, p, 4, rng)
    K = vel.diffusion_matrix(model)
    cov = cv.from_driver(p)
    for tf in family(x):
        c = testfn.Calculus(model, p, tf)
        S = c.state(f, z, n)
        L = testfn.limit_generator(tf, S.rho, S.z, cov, K)
        scale = np.abs(c.L1(c.phi1, S)) + np.abs(L) + 1e-12
        assert np.all(np.abs(c.L1(c.phi1, S) + c.L2(c.phi2, S) - L) / scale < 1e-10)


def test_averaged_first_order_generator_vanishes(two, p, x, rng):
    tf = family(x)[2]
    c = testfn.Calculus(two, p, tf)
    f, z, _ = testfn.random_states(two, p, 1, rng)
    feq = vel.equilibrium_field(two, vel.density(two, f)[0])
    n = drv.stationary_sample(p, rng, size=20000).coeffs
    S = c.state(np.broadcast_to(feq, (20000,) + feq.shape), np.broadcast_to(z[0], (20000, NX)), n)
    v = c.L1(c.phi, S)
    assert abs(v.mean()) < 3 * v.std(ddof=1) / np.sqrt(v.size)


def test_q_average_matches_sampling(two, p, x, rng):
    for tf in family(x)[2:4]:
        c = testfn.Calculus(two, p, tf)
        f, z, n = testfn.random_states(two, p, 1, rng)
        mc, se = testfn.q_average_mc(c, f[0], z[0], rng)
        assert abs(mc - c.value(c.q_avg, c.state(f, z, n))[0]) < 3 * se


def test_ou_generator_on_a_linear_mode(two, p, x, rng):
    tf = testfn.TestFunction("linear", np.ones(NX), "one", np.sqrt(2) * np.cos(2 * np.pi * x))
    c = testfn.Calculus(two, p, tf)
    lin = testfn.F((1.0, 0, 0, ("nE",)))
    f = np.ones((1, NX, 2))
    n = rng.standard_normal((1, p.n_modes))
    S = c.state(f, np.zeros((1, NX)), n)
    assert np.allclose(c.value(lin, S), n[0, 1])
    assert np.allclose(c.B(lin, S), -p.theta * n[0, 1])
    assert np.allclose(c.carre_du_champ(lin, S), p.sigma[1] ** 2)


def test_corrector_examples(two, p, x, rng):
    for tf in family(x):
        c = testfn.Calculus(two, p, tf)
        rho = 1 + 0.3 * np.cos(2 * np.pi * x)
        S = c.state(vel.equilibrium_field(two, rho)[None], rng.standard_normal((1, NX)) * 0.1, np.zeros((1, p.n_modes)))
        assert np.allclose(c.value(c.phi1, S), 0.0, atol=1e-14)
        assert np.allclose(c.value(c.phi2l, S), 0.0, atol=1e-14)
        assert np.allclose(c.value(c.phi2c, S), 0.0, atol=1e-14)


def test_first_corrector_for_the_mass(two, p, rng):
    tf = testfn.TestFunction("linear", np.ones(NX))
    c = testfn.Calculus(two, p, tf)
    f, z, n = testfn.random_states(two, p, 3, rng)
    S = c.state(f, z, n)
    expect = spectral.l2_inner(S.nfield, S.rho) / p.theta
    assert np.allclose(c.value(c.phi1, S), expect)


def test_limit_generator_examples(two, p, x, rng):
    K = np.array([[1.0]])
    rho = 1 + 0.4 * np.cos(2 * np.pi * x) + 0.2 * np.sin(6 * np.pi * x)
    z = 0.1 * np.sin(2 * np.pi * x)
    e1 = np.sqrt(2) * np.cos(2 * np.pi * x)
    tf = testfn.TestFunction("linear", e1, "cos", np.cos(2 * np.pi * x))
    L0 = testfn.limit_generator(tf, rho, z, cv.assemble(np.zeros((NX, NX))), K)
    w = spectral.l2_inner(z, tf.eta)
    assert np.allclose(L0, -4 * np.pi**2 * spectral.l2_inner(rho, e1) * np.cos(w))
    cov = cv.from_driver(p)
    lin = testfn.TestFunction("linear", e1)
    expect = -4 * np.pi**2 * spectral.l2_inner(rho, e1) + 0.5 * spectral.l2_inner(cov.F * rho, e1)
    assert np.allclose(testfn.limit_generator(lin, rho, z, cov, K), expect)
    sq = testfn.TestFunction("quadratic", np.ones(NX))
    u = spectral.l2_inner(rho, np.ones(NX))
    a = cov.eigenfields @ rho / NX
    expect = 2 * u * 0.5 * spectral.l2_inner(cov.F * rho, np.ones(NX)) + np.sum(cov.eigenvalues * a**2)
    assert np.allclose(testfn.limit_generator(sq, rho, z, cov, K), expect)
    for tf in family(x):
        assert np.allclose(testfn.limit_generator(tf, rho, z, cov, K), testfn.limit_generator_trace(tf, rho, z, cov, K))


def test_residual_is_eps_times_L1_phi2(two, p, x, rng):
    tf = family(x)[3]
    c = testfn.Calculus(two, p, tf)
    f, z, n = testfn.random_states(two, p, 4, rng)
    S = c.state(f, z, n)
    L = c.value(c.limit, S)
    for eps in (0.2, 0.05):
        assert np.allclose(c.L_eps(c.phi_eps(eps), S, eps) - L, eps * c.L1(c.phi2, S), rtol=1e-8, atol=1e-12)


def test_residual_slope_is_one(two, p, x, rng):
    f, z, n = testfn.random_states(two, p, 16, rng)
    for tf in family(x):
        rep = testfn.generator_residual(testfn.Calculus(two, p, tf), f, z, n, (0.2, 0.1, 0.05, 0.025))
        assert abs(rep.slope - 1.0) < 0.15


def test_degenerate_state_is_excluded(two, p):
    tf = testfn.TestFunction("linear", np.ones(NX))
    c = testfn.Calculus(two, p, tf)
    rep = testfn.generator_residual(c, np.ones((2, NX, 2)), np.zeros((2, NX)),
                                    np.r_[np.zeros((1, p.n_modes)), np.ones((1, p.n_modes))], (0.2, 0.1))
    assert rep.excluded == 1


def test_derivatives_match_finite_differences(two, p, x, rng):
    f, z, n = testfn.random_states(two, p, 4, rng)
    h = 1e-5
    for tf in family(x):
        c = testfn.Calculus(two, p, tf)
        for Fn in (c.phi1, c.phi2, c.phi_eps(0.1)):
            df, dz, dn = rng.standard_normal(f.shape), rng.standard_normal(z.shape), rng.standard_normal(n.shape)
            S = c.state(f, z, n)
            exact = c.D_f(Fn, S, df) + c.D_z(Fn, S, dz) + np.sum(c.grad_n(Fn, S) * dn, axis=1)
            up = c.value(Fn, c.state(f + h * df, z + h * dz, n + h * dn))
            down = c.value(Fn, c.state(f - h * df, z - h * dz, n - h * dn))
            assert np.allclose((up - down) / (2 * h), exact, rtol=1e-5, atol=1e-7)
            lap = c.weighted_laplacian_n(Fn, S)
            fd = 0.0
            for j in range(p.n_modes):
                e = np.zeros(p.n_modes)
                e[j] = 1e-3
                fd = fd + p.sigma[j] ** 2 * (c.value(Fn, c.state(f, z, n + e)) - 2 * c.value(Fn, S)
                                             + c.value(Fn, c.state(f, z, n - e))) / 1e-6
            assert np.allclose(fd, lap, rtol=1e-4, atol=1e-6)


def test_corrector_growth_is_bounded(two, p, x, rng):
    tf = family(x)[3]
    c = testfn.Calculus(two, p, tf)
    f, z, n = testfn.random_states(two, p, 16, rng)
    fn = vel.fspace_norm(two, f)
    worst = []
    for s in (1.0, 4.0, 16.0):
        S = c.state(s * f, z, s * n)
        en = drv.e_norm(s * n, p)
        r1 = np.abs(c.value(c.phi1, S)) / ((1 + (s * fn) ** 2) * (1 + en))
        r2 = np.abs(c.value(c.phi2, S)) / ((1 + (s * fn) ** 2) * (1 + en**2))
        worst.append(max(r1.max(), r2.max()))
    assert worst[-1] <= 2 * worst[0]


def test_resolvent_rules(p, rng):
    g = rng.standard_normal(p.n_modes)
    n0 = rng.standard_normal(p.n_modes)
    mean_q = float(np.sum(g**2 * p.stationary_var))
    for lam in (0.0, 2.0):
        v, se = testfn.resolvent_quadrature(p, lambda m: m @ g, n0, lam, rng, paths=1000)
        assert abs(v - testfn.resolvent_linear(n0 @ g, lam, p.theta)) < 3 * se
        v, se = testfn.resolvent_quadrature(p, lambda m: (m @ g) ** 2 - mean_q, n0, lam, rng, paths=1000)
        assert abs(v - testfn.resolvent_quadratic((n0 @ g) ** 2, mean_q, lam, p.theta)) < 3 * se


def test_martingale_statistic_examples():
    times = np.linspace(0, 1, 11)
    zero = testfn.martingale_statistic(np.zeros((50, 11)), times, 0.2, 0.8, np.ones(50))
    assert zero.exact_zero and zero.z == 0.0
    rng = np.random.default_rng(3)
    walk = np.cumsum(np.c_[np.zeros(4000), rng.standard_normal((4000, 10))], axis=1)
    res = testfn.martingale_statistic(walk, times, 0.3, 1.0, np.tanh(walk[:, 3]))
    assert abs(res.z) < 3
    drift = walk + 0.5 * times
    assert abs(testfn.martingale_statistic(drift, times, 0.0, 1.0, np.ones(4000)).z) > 5
    rej = np.zeros(4000, bool)
    rej[:10] = True
    assert np.isfinite(testfn.martingale_statistic(walk, times, 0.0, 1.0, np.ones(4000), rejected=rej).z)


def test_noiseless_martingale_is_a_discretization_residual(two, x):
    from kdlab import kinetic as kin
    quiet = drv.make_params(J=2, scale=0.0, nx=NX)
    tf = testfn.TestFunction("sin", 1 + np.cos(2 * np.pi * x))
    f0 = vel.equilibrium_field(two, 1 + 0.5 * np.cos(2 * np.pi * x))
    out = []
    for c_dt in (0.2, 0.1, 0.05):
        cfg = kin.SolverConfig(eps=0.1, T=0.05, c_dt=c_dt, noise=False)
        rec = testfn.MartingaleRecorder(testfn.Calculus(two, quiet, tf), 0.1, cfg.n_steps, 1)
        kin.simulate_ensemble(f0, two, quiet, cfg, observers=[rec])
        out.append(abs(rec.martingale()[0, -1]))
    assert out[0] > out[1] > out[2]
    assert out[1] / out[2] > 1.8
