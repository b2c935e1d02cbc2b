"""Splitting solver for the scaled kinetic equation driven by the OU field.

    df + (1/eps) a . grad f dt = (1/eps^2) L f dt + (1/eps) f m(t/eps^2) dt

Each step composes exact flows of transport, relaxation and multiplicative
noise.  Ensembles are advanced together with the trajectory as the leading
axis; every trajectory consumes only its own random stream.
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import driver as drv
from . import spectral
from .stopping import StoppingConfig, driver_stop, eps_max, hitting_time, update_zeta
from .velocity import VelocityModel, bgk_apply, density, fspace_norm


@dataclass(frozen=True)
class SolverConfig:
    eps: float
    T: float = 0.5
    c_dt: float = 0.25
    stopping: StoppingConfig = field(default_factory=StoppingConfig)
    scheme: str = "lie"
    snapshots: int = 100
    noise: bool = True

    def __post_init__(self):
        if not 0 < self.c_dt <= 0.5:
            raise ValueError("c_dt must lie in (0, 0.5] to resolve the relaxation scale")
        if self.scheme not in ("lie", "strang"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def n_steps(self):
        return int(np.ceil(self.T / (self.c_dt * self.eps**2) - 1e-9))

    @property
    def dt(self):
        return self.T / self.n_steps


def transport_substep(f, model, dt, eps):
    """Exact periodic shift of every velocity slice by (dt/eps) a_k."""
    disp = (dt / eps) * model.velocity[:, 0]
    return spectral.shift(f, disp, axis=-2)


def relaxation_substep(f, model, dt, eps):
    """Exact flow of df/dt = Lf / eps^2: rho M + exp(-dt/eps^2)(f - rho M)."""
    eq = density(model, f)[..., None] * model.equilibrium
    return eq + np.exp(-dt / eps**2) * (f - eq)


def noise_substep(f, m_field, dt, eps):
    """Exact flow of df/dt = f m / eps with the field frozen."""
    return np.exp((dt / eps) * np.asarray(m_field))[..., None] * f


def energy_constant(model, Lambda, T):
    return float(np.exp(2 * Lambda + 4 * model.a_l2m**2 * Lambda**2 * T))


@dataclass
class StoppedTrajectory:
    times: np.ndarray
    snap_times: np.ndarray
    rho: np.ndarray          # stopped density snapshots (n_snap, nx)
    zeta: np.ndarray         # stopped zeta snapshots
    fnorm_sq: np.ndarray     # ||f(t)||^2 (unstopped, every step)
    dissipation: np.ndarray  # (1/eps^2) int_0^t ||Lf||^2 (unstopped)
    e_norm: np.ndarray
    zeta_c1: np.ndarray
    tau_eps: float
    tau_lambda: float
    tau: float
    diverged: bool
    seed: object = None


@dataclass
class EnsembleRun:
    eps: float
    dt: float
    times: np.ndarray         # (n+1,)
    snap_idx: np.ndarray      # step indices of snapshots
    rho: np.ndarray           # (B, n_snap, nx), stopped
    zeta: np.ndarray          # (B, n_snap, nx), stopped
    rho_free: np.ndarray      # unstopped snapshots
    zeta_free: np.ndarray
    fnorm_sq: np.ndarray      # (B, n+1), unstopped
    dissipation: np.ndarray   # (B, n+1), unstopped
    e_norm: np.ndarray        # (B, n+1)
    zeta_c1: np.ndarray       # (B, n+1)
    rho_l2_sq: np.ndarray     # (B, n+1), ||rho(t)||^2 unstopped
    tau_eps: np.ndarray
    tau_lambda: np.ndarray
    tau: np.ndarray
    diverged: np.ndarray
    f0_norm_sq: np.ndarray
    f_final: np.ndarray       # stopped final state (B, nx, nv)
    seeds: list = field(default_factory=list)

    @property
    def snap_times(self):
        return self.times[self.snap_idx]

    @property
    def size(self):
        return self.tau.size

    def trajectory(self, i):
        return StoppedTrajectory(
            self.times, self.snap_times, self.rho[i], self.zeta[i], self.fnorm_sq[i],
            self.dissipation[i], self.e_norm[i], self.zeta_c1[i], float(self.tau_eps[i]),
            float(self.tau_lambda[i]), float(self.tau[i]), bool(self.diverged[i]),
            self.seeds[i] if self.seeds else None)


Observer = Callable[[int, float, np.ndarray, np.ndarray, np.ndarray, np.ndarray], None]


def _draw_noise(rngs, params, n_steps):
    sd = np.sqrt(params.stationary_var)
    m0 = np.stack([r.standard_normal(params.n_modes) for r in rngs]) * sd
    normals = np.stack([r.standard_normal((n_steps, 2, params.n_modes)) for r in rngs])
    return m0, normals


def simulate_ensemble(f0, model: VelocityModel, params: drv.OUParams, cfg: SolverConfig,
                      rngs: Sequence[np.random.Generator] = (), size=None,
                      observers: Sequence[Observer] = (), seeds=None):
    """Advance an ensemble of trajectories to time T.

    f0 is (nx, nv) or (B, nx, nv).  With noise on, one generator per trajectory
    must be given; it supplies the stationary initial field and all OU
    increments.  Observers are called at every grid time with
    (index, t, f, zeta, m_coeffs, frozen), where frozen flags trajectories
    already stopped at an earlier grid time.
    """
    eps, n, dt = cfg.eps, cfg.n_steps, cfg.dt
    f0 = np.asarray(f0, dtype=float)
    B = len(rngs) if cfg.noise else (size or (f0.shape[0] if f0.ndim == 3 else 1))
    if cfg.noise and B == 0:
        raise ValueError("noisy runs need one generator per trajectory")
    f = np.broadcast_to(f0, (B,) + f0.shape[-2:]).copy()
    nx = f.shape[1]
    if nx != params.nx:
        raise ValueError("driver grid and kinetic grid differ")
    E = drv.basis(params.J, nx)
    if cfg.noise:
        m, normals = _draw_noise(rngs, params, n)
    else:
        m, normals = np.zeros((B, params.n_modes)), None
    decay_h, std_h = drv.transition_coefficients(params, 0.5 * dt / eps**2)

    times = dt * np.arange(n + 1)
    stride = max(1, n // max(cfg.snapshots, 1))
    snap_idx = np.unique(np.concatenate([np.arange(0, n + 1, stride), [n]]))
    ns = snap_idx.size
    rho_s = np.empty((B, ns, nx)); zeta_s = np.empty((B, ns, nx))
    rho_f = np.empty((B, ns, nx)); zeta_f = np.empty((B, ns, nx))
    fn = np.empty((B, n + 1)); lf = np.empty((B, n + 1))
    en = np.empty((B, n + 1)); zc = np.empty((B, n + 1)); r2 = np.empty((B, n + 1))

    zeta = np.zeros((B, nx))
    thr = cfg.stopping.driver_threshold(eps)
    Lam = cfg.stopping.Lambda
    stop_idx = np.full(B, n + 1)
    tau_eps = np.full(B, np.inf); tau_lam = np.full(B, np.inf)
    diverged = np.zeros(B, bool)
    f_stop = f.copy(); zeta_stop = zeta.copy()
    si = 0

    def record(k, f, zeta, m):
        nonlocal si, f_stop, zeta_stop
        frozen = stop_idx < k
        fn[:, k] = fspace_norm(model, f) ** 2
        lf[:, k] = fspace_norm(model, bgk_apply(model, f)) ** 2
        en[:, k] = drv.e_norm(m, params)
        zc[:, k] = spectral.c1_norm(zeta)
        rho = density(model, f)
        r2[:, k] = spectral.l2_inner(rho, rho)
        hit_e = (en[:, k] > thr) & np.isinf(tau_eps)
        hit_l = (zc[:, k] >= Lam) & np.isinf(tau_lam)
        tau_eps[hit_e] = times[k]
        tau_lam[hit_l] = times[k]
        live = ~frozen
        f_stop[live] = f[live]
        zeta_stop[live] = zeta[live]
        newly = live & (hit_e | hit_l | diverged)
        stop_idx[newly] = k
        for obs in observers:
            obs(k, times[k], f, zeta, m, frozen)
        if si < ns and snap_idx[si] == k:
            rho_s[:, si] = density(model, f_stop); zeta_s[:, si] = zeta_stop
            rho_f[:, si] = rho; zeta_f[:, si] = zeta
            si += 1

    record(0, f, zeta, m)
    a_disp_half = 0.5 * dt
    for k in range(1, n + 1):
        if cfg.noise:
            m_half = decay_h * m + std_h * normals[:, k - 1, 0]
            m_next = decay_h * m_half + std_h * normals[:, k - 1, 1]
        else:
            m_half = m_next = m
        field_mid = m_half @ E
        if cfg.scheme == "lie":
            f = transport_substep(f, model, dt, eps)
            f = relaxation_substep(f, model, dt, eps)
            f = noise_substep(f, field_mid, dt, eps)
        else:
            f = transport_substep(f, model, a_disp_half, eps)
            f = relaxation_substep(f, model, a_disp_half, eps)
            f = noise_substep(f, field_mid, dt, eps)
            f = relaxation_substep(f, model, a_disp_half, eps)
            f = transport_substep(f, model, a_disp_half, eps)
        bad = ~np.all(np.isfinite(f), axis=(1, 2))
        if bad.any():
            diverged |= bad
            f[bad] = f_stop[bad]
        zeta = update_zeta(zeta, m @ E, m_next @ E, dt, eps)
        m = m_next
        record(k, f, zeta, m)

    diss = np.concatenate(
        [np.zeros((B, 1)), np.cumsum(0.5 * dt * (lf[:, 1:] + lf[:, :-1]), axis=1)], axis=1
    ) / eps**2
    return EnsembleRun(eps, dt, times, snap_idx, rho_s, zeta_s, rho_f, zeta_f, fn, diss, en, zc, r2,
                       tau_eps, tau_lam, np.minimum(tau_eps, tau_lam), diverged,
                       fn[:, 0].copy(), f_stop, list(seeds) if seeds is not None else [])


@dataclass
class AuxiliaryRun:
    """Driver-only record: the E-norm, zeta and its stopping data on the solver grid."""
    eps: float
    times: np.ndarray
    e_norm: np.ndarray      # (B, n+1)
    zeta_c1: np.ndarray     # (B, n+1)
    zeta_h2_sq: np.ndarray  # (B, n+1) ||zeta||^2_{H^2}
    snap_idx: np.ndarray
    zeta: np.ndarray        # (B, n_snap, nx) unstopped
    tau_eps: np.ndarray
    tau_lambda: np.ndarray

    @property
    def tau(self):
        return np.minimum(self.tau_eps, self.tau_lambda)

    @property
    def snap_times(self):
        return self.times[self.snap_idx]


def auxiliary_paths(params, cfg: SolverConfig, rngs, snapshots=None):
    """Simulate only the driver and zeta on the kinetic solver grid.

    Consumes each generator exactly as simulate_ensemble does, so the same
    streams give the same driver path, zeta and stopping times.
    """
    eps, n, dt = cfg.eps, cfg.n_steps, cfg.dt
    B = len(rngs)
    E = drv.basis(params.J, params.nx)
    m, normals = _draw_noise(rngs, params, n)
    decay_h, std_h = drv.transition_coefficients(params, 0.5 * dt / eps**2)
    times = dt * np.arange(n + 1)
    snapshots = cfg.snapshots if snapshots is None else snapshots
    stride = max(1, n // max(snapshots, 1))
    snap_idx = np.unique(np.concatenate([np.arange(0, n + 1, stride), [n]]))
    zeta = np.zeros((B, params.nx))
    en = np.empty((B, n + 1)); zc = np.empty((B, n + 1)); h2 = np.empty((B, n + 1))
    zs = np.empty((B, snap_idx.size, params.nx))
    si = 0
    for k in range(n + 1):
        if k > 0:
            m_half = decay_h * m + std_h * normals[:, k - 1, 0]
            m_next = decay_h * m_half + std_h * normals[:, k - 1, 1]
            zeta = update_zeta(zeta, m @ E, m_next @ E, dt, eps)
            m = m_next
        en[:, k] = drv.e_norm(m, params)
        zc[:, k] = spectral.c1_norm(zeta)
        h2[:, k] = spectral.sobolev_norm_sq(zeta, 2)
        if si < snap_idx.size and snap_idx[si] == k:
            zs[:, si] = zeta
            si += 1
    tau_e = driver_stop(en, times, eps, cfg.stopping.alpha)
    tau_l = hitting_time(zc, times, cfg.stopping.Lambda)
    return AuxiliaryRun(eps, times, en, zc, h2, snap_idx, zs, tau_e, tau_l)


def simulate_trajectory(f0, model, params, cfg, rng=None, seed=None):
    rngs = [rng] if cfg.noise else []
    run = simulate_ensemble(f0, model, params, cfg, rngs, size=1,
                            seeds=[seed] if seed is not None else None)
    return run.trajectory(0)


@dataclass
class EnergyReport:
    passed: bool
    applicable: bool
    constant: float
    worst_ratio: float
    violations: int
    checked: int


def energy_report(run: EnsembleRun, model, Lambda, T):
    """Pathwise check of ||f||^2 + (1/eps^2) int ||Lf||^2 <= C ||f0||^2 up to tau_Lambda."""
    C = energy_constant(model, Lambda, T)
    lhs = run.fnorm_sq + run.dissipation
    ok_t = run.times[None, :] <= run.tau_lambda[:, None]
    ratio = np.where(ok_t, lhs / (C * run.f0_norm_sq[:, None]), 0.0)
    viol = np.any(ratio > 1.0, axis=1)
    applicable = run.eps <= eps_max(model.a_sup, Lambda) + 1e-15
    return EnergyReport(bool(not viol.any()), bool(applicable), C, float(ratio.max()),
                        int(viol.sum()), int(run.size))


def heat_solution(rho0, K, t):
    """Exact solution of d_t rho = K rho'' on the unit torus (d=1)."""
    ell = spectral.wavenumbers(rho0.shape[-1])
    rh = np.fft.fft(rho0, axis=-1) * np.exp(-4 * np.pi**2 * float(np.squeeze(K)) * ell**2 * t)
    return np.real(np.fft.ifft(rh, axis=-1))


def telegraph_mode(ell, eps, t, rho_hat0=1.0):
    """Exact density mode of the noiseless two-velocity model from equilibrium data.

    rho'' eps^2 + rho' + k^2 rho = 0 with rho(0) = rho_hat0 and rho'(0) = 0,
    k = 2 pi ell; used to separate discretization error from the O(eps^2)
    modelling gap of the diffusion limit.
    """
    k = 2 * np.pi * ell
    roots = np.roots([eps**2, 1.0, k**2]).astype(complex)
    r1, r2 = roots
    c1 = -r2 / (r1 - r2)
    c2 = r1 / (r1 - r2)
    return np.real(rho_hat0 * (c1 * np.exp(r1 * t) + c2 * np.exp(r2 * t)))
