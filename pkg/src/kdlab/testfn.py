"""Test functions, generators and correctors under the OU driver.

A test function is phi(rho, z) = psi(<rho, xi>) chi(z) with psi in
{u, u^2, sin u} and chi in {1, cos <z, eta>}.  Every functional built from it
(phi, the correctors phi_1, phi_2 and the generator pieces) is a finite sum

    coef * psi^(a)(u) * chi^(b)(w) * p_1 * ... * p_r

where u = <rho, xi>, w = <z, eta> and each p_i is a pairing of the state that
is linear in f (or quadratic for one of the averaged pairings) and of degree
0, 1 or 2 in the driver coefficients n.  Derivatives in f, z and n, the OU
generator B and the carre du champ Gamma act exactly on this family, so the
corrector identities can be checked to rounding error.

Velocity averages of transport terms use the reading
    bar(A h)(x) = sum_k mu_k a_k d_x h(x, k),
the only one under which bar(A^2 rho M) = (rho K')' holds.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import driver as drv
from . import spectral
from .velocity import bgk_apply, density, diffusion_matrix


# -- scalar libraries ---------------------------------------------------------

def _psi(kind, order, u):
    if kind == "linear":
        return u if order == 0 else (np.ones_like(u) if order == 1 else np.zeros_like(u))
    if kind == "quadratic":
        return [u**2, 2 * u, 2 * np.ones_like(u)][order] if order <= 2 else np.zeros_like(u)
    if kind == "sin":
        return [np.sin(u), np.cos(u), -np.sin(u), -np.cos(u)][order % 4]
    raise ValueError(f"unknown psi {kind!r}")


def _chi(kind, order, w):
    if kind == "one":
        return np.ones_like(w) if order == 0 else np.zeros_like(w)
    if kind == "cos":
        return [np.cos(w), -np.sin(w), -np.cos(w), np.sin(w)][order % 4]
    raise ValueError(f"unknown chi {kind!r}")


@dataclass(frozen=True)
class TestFunction:
    psi: str
    xi: np.ndarray
    chi: str = "one"
    eta: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        _psi(self.psi, 0, np.zeros(1))
        _chi(self.chi, 0, np.zeros(1))
        if self.eta is None:
            object.__setattr__(self, "eta", np.zeros_like(self.xi))

    def psi_d(self, order, u):
        return _psi(self.psi, order, u)

    def chi_d(self, order, w):
        return _chi(self.chi, order, w)

    def __call__(self, rho, z):
        u = spectral.l2_inner(rho, self.xi)
        w = spectral.l2_inner(z, self.eta)
        return self.psi_d(0, u) * self.chi_d(0, w)


def eval_phi(tf, rho, z):
    return tf(rho, z)


# -- functionals --------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    coef: float
    a: int         # derivative order of psi
    b: int         # derivative order of chi
    pairs: tuple   # pairing names


class Functional:
    """Finite sum of Terms, closed under addition and scalar multiplication."""

    def __init__(self, terms=()):
        self.terms = tuple(terms)

    def __add__(self, other):
        return Functional(self.terms + other.terms)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, s):
        return Functional(Term(s * t.coef, t.a, t.b, t.pairs) for t in self.terms)


def F(*terms):
    return Functional(Term(*t) for t in terms)


# -- state with cached pairings ----------------------------------------------

class State:
    """A batch of states (f, z, n) with pairings cached.

    f: (B, nx, nv), z: (B, nx), n: (B, 2J+1) driver coefficients.
    """

    def __init__(self, calc, f, z, n):
        self.c = calc
        f = np.asarray(f, dtype=float)
        self.f = f if f.ndim == 3 else f[None]
        self.z = np.asarray(z, dtype=float).reshape(self.f.shape[0], -1)
        self.n = np.asarray(n, dtype=float).reshape(self.f.shape[0], -1)
        self.rho = density(calc.model, self.f)
        self.nfield = self.n @ calc.E
        self.u = calc.ip(self.rho, calc.xi)
        self.w = calc.ip(self.z, calc.eta)
        self._val = {}
        self._dn = {}
        self._dnn = {}
        self._df = {}

    # pairing values and derivatives -----------------------------------
    def val(self, name):
        if name not in self._val:
            self._val[name] = self.c.pair_value(name, self)
        return self._val[name]

    def dn(self, name):
        if name not in self._dn:
            self._dn[name] = self.c.pair_dn(name, self)
        return self._dn[name]

    def dnn(self, name):
        if name not in self._dnn:
            self._dnn[name] = self.c.pair_dnn(name, self)
        return self._dnn[name]

    def df(self, name, key, h):
        k = (name, key)
        if k not in self._df:
            self._df[k] = self.c.pair_df(name, self, h)
        return self._df[k]

    def direction(self, key):
        """Named f-directions used by the generators."""
        if key == "L1":
            return -self.c.transport(self.f) + self.nfield[..., None] * self.f
        if key == "L2":
            return bgk_apply(self.c.model, self.f)
        raise KeyError(key)


class Calculus:
    """Closed-form generator calculus for one test function."""

    N_LIN = ("nR", "nE", "Anf", "nAf")

    def __init__(self, model, params, tf: TestFunction):
        if model.dim != 1:
            raise NotImplementedError("the calculus is implemented for d = 1")
        self.model, self.params, self.tf = model, params, tf
        self.theta = params.theta
        self.sig2 = params.sigma**2
        self.s2 = params.stationary_var
        nx = params.nx
        self.nx = nx
        self.E = drv.basis(params.J, nx)
        self.xi = np.asarray(tf.xi, dtype=float)
        self.eta = np.asarray(tf.eta, dtype=float)
        self.dxi = spectral.derivative(self.xi)
        self.ddxi = spectral.derivative(self.dxi)
        mu, a, M = model.weights, model.velocity[:, 0], model.equilibrium
        self.mua = mu * a
        self.mua2 = mu * a**2
        self.K = float(diffusion_matrix(model)[0, 0])
        self.W_A = -self.mua[None, :] * self.dxi[:, None]
        self.W_A2 = self.mua2[None, :] * self.ddxi[:, None]
        self.e_eta = self.E @ self.eta / nx
        self.cdiag = (self.E**2).T @ self.s2
        th = self.theta
        self.phi = F((1.0, 0, 0, ()))
        self.phi1 = F((-1.0, 1, 0, ("A",)), (1 / th, 1, 0, ("nR",)), (1 / th, 0, 1, ("nE",)))
        self.c_part = F((1.0, 2, 0, ("A", "A")), (1.0, 1, 0, ("A2",)))
        self.c_avg = F((1.0, 1, 0, ("KR",)))
        g = 1.0 + 1.0 / th
        self.l_part = F((-g, 2, 0, ("A", "nR")), (-1.0, 1, 0, ("Anf",)),
                        (-1 / th, 1, 0, ("nAf",)), (-g, 1, 1, ("A", "nE")))
        self.q_part = F((1 / th, 2, 0, ("nR", "nR")), (1 / th, 1, 0, ("nnR",)),
                        (2 / th, 1, 1, ("nR", "nE")), (1 / th, 0, 2, ("nE", "nE")))
        self.q_avg = F((1 / th, 2, 0, ("Cqq",)), (1 / th, 1, 0, ("CF",)),
                       (2 / th, 1, 1, ("Cqe",)), (1 / th, 0, 2, ("Cee",)))
        self.phi2c = F((0.5, 2, 0, ("A", "A")), (1.0, 1, 0, ("A2",)), (-1.0, 1, 0, ("KR",)))
        self.phi2l = (1.0 / (1.0 + th)) * self.l_part
        self.phi2q = (1.0 / (2 * th)) * (self.q_part - self.q_avg)
        self.phi2 = self.phi2c + self.phi2l + self.phi2q
        self.limit = self.c_avg + self.q_avg

    def phi_eps(self, eps):
        return self.phi + eps * self.phi1 + eps**2 * self.phi2

    # grid helpers --------------------------------------------------------
    def ip(self, g, h):
        return spectral.l2_inner(g, h)

    def transport(self, f):
        """A f = a_k d_x f(., k)."""
        return spectral.derivative(f, axis=-2) * self.model.velocity[:, 0]

    def vel_avg_A(self, h):
        return spectral.derivative(h, axis=-2) @ self.mua

    def modes(self, g):
        """<e_j, g> for every basis function, (..., 2J+1)."""
        return g @ self.E.T / self.nx

    def state(self, f, z, n):
        return State(self, f, z, n)

    # pairings ---------------------------------------------------------
    def pair_value(self, name, S):
        rx = S.rho * self.xi
        if name == "A":
            return np.sum(S.f * self.W_A, axis=(1, 2)) / self.nx
        if name == "A2":
            return np.sum(S.f * self.W_A2, axis=(1, 2)) / self.nx
        if name == "KR":
            return self.K * self.ip(S.rho, self.ddxi)
        if name == "nR":
            return self.ip(S.nfield, rx)
        if name == "nE":
            return S.n @ self.e_eta
        if name == "Anf":
            return self.ip(S.nfield, -(S.f @ self.mua) * self.dxi)
        if name == "nAf":
            return self.ip(S.nfield, self.xi * self.vel_avg_A(S.f))
        if name == "nnR":
            return self.ip(S.nfield**2, rx)
        if name == "Cqq":
            return self.modes(rx) ** 2 @ self.s2
        if name == "CF":
            return self.ip(self.cdiag, rx)
        if name == "Cqe":
            return self.modes(rx) @ (self.s2 * self.e_eta)
        if name == "Cee":
            return np.full(S.f.shape[0], np.sum(self.s2 * self.e_eta**2))
        raise KeyError(name)

    def pair_df(self, name, S, h):
        hb = density(self.model, h)
        hx = hb * self.xi
        if name == "A":
            return np.sum(h * self.W_A, axis=(1, 2)) / self.nx
        if name == "A2":
            return np.sum(h * self.W_A2, axis=(1, 2)) / self.nx
        if name == "KR":
            return self.K * self.ip(hb, self.ddxi)
        if name == "nR":
            return self.ip(S.nfield, hx)
        if name in ("nE", "Cee"):
            return np.zeros(S.f.shape[0])
        if name == "Anf":
            return self.ip(S.nfield, -(h @ self.mua) * self.dxi)
        if name == "nAf":
            return self.ip(S.nfield, self.xi * self.vel_avg_A(h))
        if name == "nnR":
            return self.ip(S.nfield**2, hx)
        if name == "Cqq":
            return 2 * (self.modes(S.rho * self.xi) * self.modes(hx)) @ self.s2
        if name == "CF":
            return self.ip(self.cdiag, hx)
        if name == "Cqe":
            return self.modes(hx) @ (self.s2 * self.e_eta)
        raise KeyError(name)

    def pair_dn(self, name, S):
        B, m = S.f.shape[0], self.E.shape[0]
        if name == "nR":
            return self.modes(S.rho * self.xi)
        if name == "nE":
            return np.broadcast_to(self.e_eta, (B, m))
        if name == "Anf":
            return self.modes(-(S.f @ self.mua) * self.dxi)
        if name == "nAf":
            return self.modes(self.xi * self.vel_avg_A(S.f))
        if name == "nnR":
            return 2 * self.modes(S.nfield * S.rho * self.xi)
        return np.zeros((B, m))

    def pair_dnn(self, name, S):
        if name == "nnR":
            return 2 * (S.rho * self.xi) @ (self.E**2).T / self.nx
        return np.zeros((S.f.shape[0], self.E.shape[0]))

    # functional calculus ------------------------------------------------
    def _prod(self, S, names, skip=()):
        out = np.ones(S.f.shape[0])
        for i, nm in enumerate(names):
            if i not in skip:
                out = out * S.val(nm)
        return out

    def value(self, Fn, S):
        tot = 0.0
        for t in Fn.terms:
            tot = tot + t.coef * self.tf.psi_d(t.a, S.u) * self.tf.chi_d(t.b, S.w) * self._prod(S, t.pairs)
        return tot

    def D_f(self, Fn, S, h, key=None):
        """Directional derivative in f along h (cache pairings under key)."""
        key = key if key is not None else id(h)
        du = self.ip(density(self.model, h), self.xi)
        tot = 0.0
        for t in Fn.terms:
            ps, ch = self.tf.psi_d(t.a, S.u), self.tf.chi_d(t.b, S.w)
            acc = self.tf.psi_d(t.a + 1, S.u) * du * ch * self._prod(S, t.pairs)
            for i, nm in enumerate(t.pairs):
                acc = acc + ps * ch * S.df(nm, key, h) * self._prod(S, t.pairs, (i,))
            tot = tot + t.coef * acc
        return tot

    def D_z(self, Fn, S, hz):
        dw = self.ip(hz, self.eta)
        tot = 0.0
        for t in Fn.terms:
            tot = tot + t.coef * self.tf.psi_d(t.a, S.u) * self.tf.chi_d(t.b + 1, S.w) * dw * self._prod(S, t.pairs)
        return tot

    def grad_n(self, Fn, S):
        """Gradient in the driver coefficients, (B, 2J+1)."""
        tot = 0.0
        for t in Fn.terms:
            sc = t.coef * self.tf.psi_d(t.a, S.u) * self.tf.chi_d(t.b, S.w)
            for i, nm in enumerate(t.pairs):
                tot = tot + (sc * self._prod(S, t.pairs, (i,)))[:, None] * S.dn(nm)
        if np.isscalar(tot):
            return np.zeros((S.f.shape[0], self.E.shape[0]))
        return tot

    def weighted_laplacian_n(self, Fn, S):
        """sum_j sigma_j^2 d^2/dn_j^2 of the functional."""
        tot = 0.0
        for t in Fn.terms:
            sc = t.coef * self.tf.psi_d(t.a, S.u) * self.tf.chi_d(t.b, S.w)
            r = len(t.pairs)
            for i in range(r):
                tot = tot + sc * (S.dnn(t.pairs[i]) @ self.sig2) * self._prod(S, t.pairs, (i,))
                for l in range(r):
                    if l != i:
                        cross = (S.dn(t.pairs[i]) * S.dn(t.pairs[l])) @ self.sig2
                        tot = tot + sc * cross * self._prod(S, t.pairs, (i, l))
        return tot

    def B(self, Fn, S):
        """OU generator -theta sum n_j d_j + 1/2 sum sigma_j^2 d_j^2."""
        g = self.grad_n(Fn, S)
        return -self.theta * np.sum(S.n * g, axis=1) + 0.5 * self.weighted_laplacian_n(Fn, S)

    def carre_du_champ(self, Fn, S):
        return self.grad_n(Fn, S) ** 2 @ self.sig2

    def L1(self, Fn, S):
        return self.D_f(Fn, S, S.direction("L1"), "L1") + self.D_z(Fn, S, S.nfield)

    def L2(self, Fn, S):
        return self.D_f(Fn, S, S.direction("L2"), "L2") + self.B(Fn, S)

    def L_eps(self, Fn, S, eps):
        return self.L1(Fn, S) / eps + self.L2(Fn, S) / eps**2


def limit_generator(tf, rho, z, cov, K):
    """L phi from kernel contractions with k and F = diag k.

    L phi = psi'(u)<(K rho')', xi> chi + 1/2 psi''(u)<rho xi, k rho xi> chi
            + 1/2 psi'(u)<F rho, xi> chi + psi'(u)chi'(w)<rho xi, k eta>
            + 1/2 psi(u)chi''(w)<eta, k eta>
    """
    rho = np.atleast_2d(rho); z = np.atleast_2d(z)
    nx = rho.shape[-1]
    xi, eta = tf.xi, tf.eta
    u = spectral.l2_inner(rho, xi); w = spectral.l2_inner(z, eta)
    d = [tf.psi_d(i, u) for i in range(3)]
    c = [tf.chi_d(i, w) for i in range(3)]
    k = cov.kernel / nx**2
    rx = rho * xi
    lap = float(np.squeeze(K)) * spectral.derivative(spectral.derivative(rho))
    t1 = d[1] * spectral.l2_inner(lap, xi) * c[0]
    t2 = 0.5 * d[2] * np.einsum("bx,xy,by->b", rx, k, rx) * c[0]
    t3 = 0.5 * d[1] * spectral.l2_inner(cov.F * rho, xi) * c[0]
    t45 = d[1] * c[1] * (rx @ k @ eta)
    t6 = 0.5 * d[0] * c[2] * (eta @ k @ eta)
    return t1 + t2 + t3 + t45 + t6


def limit_generator_trace(tf, rho, z, cov, K):
    """Same operator in trace form over the eigenpairs (q_i, F_i)."""
    rho = np.atleast_2d(rho); z = np.atleast_2d(z)
    xi, eta = tf.xi, tf.eta
    u = spectral.l2_inner(rho, xi); w = spectral.l2_inner(z, eta)
    d = [tf.psi_d(i, u) for i in range(3)]
    c = [tf.chi_d(i, w) for i in range(3)]
    lap = float(np.squeeze(K)) * spectral.derivative(spectral.derivative(rho))
    drift = spectral.l2_inner(lap + 0.5 * cov.F * rho, xi)
    q, Fi = cov.eigenvalues, cov.eigenfields
    a = (rho * xi) @ Fi.T / rho.shape[-1]   # <F_i rho, xi>
    e = Fi @ eta / rho.shape[-1]            # <F_i, eta>
    tr = (a**2 @ q) * d[2] * c[0] + 2 * ((a * e) @ q) * d[1] * c[1] + (e**2 @ q) * d[0] * c[2]
    return d[1] * drift * c[0] + 0.5 * tr


# -- residual and martingale statistics --------------------------------------

@dataclass
class SlopeReport:
    eps: np.ndarray
    residual: np.ndarray   # (n_eps, n_states) normalized residuals
    slope: float
    excluded: int


def random_states(model, params, n_states, rng, amp=1.0, n_scale=None):
    """Random smooth phase-space states with stationary-scale driver coefficients."""
    nx = params.nx
    x = spectral.grid(nx)
    fs = []
    for _ in range(n_states):
        f = np.ones((nx, model.nv))
        for ell in range(1, 4):
            c = rng.standard_normal((2, model.nv)) * amp / ell**2
            f = f + c[0] * np.cos(2 * np.pi * ell * x)[:, None] + c[1] * np.sin(2 * np.pi * ell * x)[:, None]
        fs.append(f)
    f = np.stack(fs)
    z = np.stack([rng.standard_normal() * np.cos(2 * np.pi * x) + rng.standard_normal() * np.sin(4 * np.pi * x)
                  for _ in range(n_states)]) * 0.3
    sd = np.sqrt(params.stationary_var) if n_scale is None else np.full(params.n_modes, n_scale)
    n = rng.standard_normal((n_states, params.n_modes)) * sd
    return f, z, n


def generator_residual(calc: Calculus, f, z, n, eps_list, limit_values=None, b=1.0, tol=1e-300):
    """Normalized |L^eps phi^eps - L phi| across eps and its log-log slope."""
    S = calc.state(f, z, n)
    if limit_values is None:
        limit_values = calc.value(calc.limit, S)
    fn = np.sqrt(np.sum(S.f**2 / calc.model.equilibrium * calc.model.weights, axis=(1, 2)) / calc.nx)
    nn = drv.e_norm(S.n, calc.params)
    norm = (1 + fn**3) * (1 + nn ** (b + 2))
    res = np.array([np.abs(calc.L_eps(calc.phi_eps(e), S, e) - limit_values) / norm for e in eps_list])
    keep = np.all(res > tol, axis=0)
    le = np.log(np.asarray(eps_list))
    mean_log = np.log(res[:, keep]).mean(axis=1)
    slope = np.polyfit(le, mean_log, 1)[0]
    return SlopeReport(np.asarray(eps_list), res, float(slope), int((~keep).sum()))


# -- resolvent oracle ---------------------------------------------------------

def resolvent_quadrature(params, fun, n0, lam, rng, paths=4000, horizon=None, dt=None):
    """Monte Carlo/trapezoid value of R_lam fun(n0) = int_0^inf e^{-lam t} E fun(m(t, n0)) dt.

    fun maps coefficient arrays (paths, 2J+1) to (paths,).  For lam = 0 the
    functional must be centred under the invariant law.
    """
    theta = params.theta
    rate = lam + theta
    if horizon is None:
        horizon = 25.0 / rate
    if dt is None:
        dt = 0.02 / rate
    n = int(np.ceil(horizon / dt))
    dt = horizon / n
    st = drv.DrivingState(np.broadcast_to(np.asarray(n0, float), (paths, params.n_modes)).copy())
    acc = 0.5 * fun(st.coeffs)
    for i in range(1, n + 1):
        st = drv.step(st, params, dt, rng)
        acc = acc + (0.5 if i == n else 1.0) * np.exp(-lam * i * dt) * fun(st.coeffs)
    vals = acc * dt
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(paths))


def resolvent_linear(value, lam, theta):
    """R_lam of a linear functional of n."""
    return value / (lam + theta)


def resolvent_quadratic(value, mean, lam, theta):
    """R_lam of a centred quadratic functional q(n) - <q>."""
    return (value - mean) / (lam + 2 * theta)


def q_average_mc(calc, f, z, rng, samples=20000):
    """Monte Carlo fallback for <q>_{rho,z}: average q over stationary n at f = rho M."""
    f = np.asarray(f, float)
    rho = density(calc.model, f[None] if f.ndim == 2 else f)[0]
    feq = rho[:, None] * calc.model.equilibrium
    n = drv.stationary_sample(calc.params, rng, size=samples).coeffs
    S = calc.state(np.broadcast_to(feq, (samples,) + feq.shape), np.broadcast_to(z, (samples, z.size)), n)
    v = calc.value(calc.q_part, S)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(samples))


# -- martingale recorder ---------------------------------------------------------

class MartingaleRecorder:
    """Solver observer accumulating the stopped Dynkin martingale of phi^eps.

    At each grid time it stores phi^eps(X), the trapezoid integral of
    L^eps phi^eps and the trapezoid integral of Gamma(phi^eps) / eps^2.
    Trajectories already stopped keep their frozen values.
    """

    def __init__(self, calc: Calculus, eps, n_steps, batch):
        self.calc, self.eps = calc, eps
        self.fun = calc.phi_eps(eps)
        self.value = np.zeros((batch, n_steps + 1))
        self.integral = np.zeros((batch, n_steps + 1))
        self.gamma_integral = np.zeros((batch, n_steps + 1))
        self._g_prev = None
        self._c_prev = None
        self._t_prev = 0.0

    def __call__(self, k, t, f, zeta, m, frozen):
        c, e = self.calc, self.eps
        S = c.state(f, zeta, m)
        val = c.value(self.fun, S)
        gen = c.L_eps(self.fun, S, e)
        gam = c.carre_du_champ(self.fun, S) / e**2
        if k == 0:
            self.value[:, 0] = val
        else:
            live = ~frozen
            dt = t - self._t_prev
            self.value[:, k] = np.where(live, val, self.value[:, k - 1])
            self.integral[:, k] = self.integral[:, k - 1] + np.where(live, 0.5 * dt * (gen + self._g_prev), 0.0)
            self.gamma_integral[:, k] = self.gamma_integral[:, k - 1] + np.where(
                live, 0.5 * dt * (gam + self._c_prev), 0.0)
        self._g_prev, self._c_prev, self._t_prev = gen, gam, t

    def martingale(self):
        return self.value - self.value[:, :1] - self.integral


@dataclass
class MartingaleTest:
    label: str
    s: float
    t: float
    mean: float
    se: float
    z: float
    exact_zero: bool = False


def martingale_statistic(M, times, s, t, g, label="", rejected=None):
    """z-score of E[(M(t) - M(s)) g]; g has one weight per trajectory."""
    i, j = int(np.argmin(np.abs(times - s))), int(np.argmin(np.abs(times - t)))
    keep = np.ones(M.shape[0], bool) if rejected is None else ~np.asarray(rejected)
    x = (M[keep, j] - M[keep, i]) * np.asarray(g)[keep]
    mean = float(x.mean())
    se = float(x.std(ddof=1) / np.sqrt(x.size))
    if se == 0.0:
        return MartingaleTest(label, s, t, mean, 0.0, 0.0, exact_zero=True)
    return MartingaleTest(label, s, t, mean, se, mean / se)


@dataclass
class VarianceRatio:
    label: str
    lhs: float
    rhs: float
    ratio: float
    se_ratio: float


def variance_identity_check(recorder: MartingaleRecorder, times, t, label=""):
    """Compare E|M(t)|^2 with E int_0^t Gamma(phi^eps) / eps^2."""
    j = int(np.argmin(np.abs(times - t)))
    M2 = recorder.martingale()[:, j] ** 2
    G = recorder.gamma_integral[:, j]
    lhs, rhs = float(M2.mean()), float(G.mean())
    n = M2.size
    ratio = lhs / rhs
    # delta-method standard error of the ratio of means
    cov = np.cov(M2, G)
    var = (cov[0, 0] / rhs**2 - 2 * lhs * cov[0, 1] / rhs**3 + lhs**2 * cov[1, 1] / rhs**4) / n
    return VarianceRatio(label, lhs, rhs, float(ratio), float(np.sqrt(max(var, 0.0))))
