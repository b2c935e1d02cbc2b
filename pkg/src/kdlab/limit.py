"""Spectral Galerkin solver for the limit equation in Ito form.

    d rho = div(K grad rho) dt + 1/2 F rho dt + sum_i sqrt(q_i) F_i rho dB_i
    d zeta = sum_i sqrt(q_i) F_i dB_i        (same increments dB_i)

The heat part is integrated exactly (exponential Euler), the drift and noise
by Euler-Maruyama.  d = 1 on the unit torus.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import spectral
from .covariance import CovarianceModel


@dataclass
class LimitState:
    rho_hat: np.ndarray  # rfft coefficients, (..., nx//2+1)
    zeta: np.ndarray     # (..., nx)
    t: float = 0.0

    @property
    def nx(self):
        return self.zeta.shape[-1]

    def rho(self):
        return np.fft.irfft(self.rho_hat, n=self.nx, axis=-1)


def initial_state(rho0, batch=None):
    rho0 = np.asarray(rho0, dtype=float)
    if batch is not None:
        rho0 = np.broadcast_to(rho0, (batch,) + rho0.shape[-1:])
    return LimitState(np.fft.rfft(rho0, axis=-1), np.zeros(rho0.shape))


def eigenvalues_heat(nx, K):
    """lambda_l = 4 pi^2 K l^2 for the rfft frequencies."""
    ell = np.arange(nx // 2 + 1)
    return 4 * np.pi**2 * float(np.squeeze(K)) * ell**2


def ito_stratonovich_check(cov: CovarianceModel, tol=1e-8):
    """Ito drift field F/2; checks it against sum_i q_i F_i^2 / 2."""
    drift = 0.5 * cov.F
    spectral_sum = 0.5 * np.sum(cov.eigenvalues[:, None] * cov.eigenfields**2, axis=0)
    err = np.max(np.abs(drift - spectral_sum))
    if err > tol * max(1.0, np.max(np.abs(drift))):
        raise AssertionError(f"Ito correction mismatch {err:.3e}")
    return drift


def limit_step(state: LimitState, q, Fi, F, K, dt, dB):
    """One exponential-Euler step; dB has shape (..., n_eig)."""
    nx = state.nx
    rho = state.rho()
    lam = eigenvalues_heat(nx, K)
    sq = np.sqrt(q)
    noise_field = (dB * sq) @ Fi                      # sum_i sqrt(q_i) F_i dB_i
    incr = dt * 0.5 * F * rho + noise_field * rho
    rh = np.exp(-lam * dt) * (state.rho_hat + np.fft.rfft(incr, axis=-1))
    return LimitState(rh, state.zeta + noise_field, state.t + dt)


@dataclass
class LimitRun:
    times: np.ndarray
    snap_idx: np.ndarray
    rho: np.ndarray    # (B, n_snap, nx)
    zeta: np.ndarray   # (B, n_snap, nx)
    l2_sq: np.ndarray  # (B, n+1) ||rho(t)||^2 at every step
    seeds: list = field(default_factory=list)

    @property
    def snap_times(self):
        return self.times[self.snap_idx]


def simulate_limit(rho0, cov: CovarianceModel, K, T, dt, rngs: Sequence[np.random.Generator],
                   snapshots=100, rtol=1e-12, seeds=None):
    """Ensemble of limit trajectories; one generator per trajectory supplies all dB."""
    n = int(np.ceil(T / dt - 1e-9))
    dt = T / n
    q, Fi = cov.truncated(rtol)
    B = len(rngs)
    dB = np.stack([r.standard_normal((n, q.size)) for r in rngs]) * np.sqrt(dt)
    st = initial_state(rho0, batch=B)
    times = dt * np.arange(n + 1)
    stride = max(1, n // max(snapshots, 1))
    snap_idx = np.unique(np.concatenate([np.arange(0, n + 1, stride), [n]]))
    nx = st.nx
    rho_s = np.empty((B, snap_idx.size, nx)); zeta_s = np.empty_like(rho_s)
    l2 = np.empty((B, n + 1))
    si = 0
    for k in range(n + 1):
        if k > 0:
            st = limit_step(st, q, Fi, cov.F, K, dt, dB[:, k - 1])
        rho = st.rho()
        l2[:, k] = spectral.l2_inner(rho, rho)
        if si < snap_idx.size and snap_idx[si] == k:
            rho_s[:, si] = rho; zeta_s[:, si] = st.zeta
            si += 1
    return LimitRun(times, snap_idx, rho_s, zeta_s, l2, list(seeds) if seeds is not None else [])


def gronwall_constant(cov: CovarianceModel):
    """C = ||F||_inf + sum_i q_i ||F_i||_inf^2."""
    return float(np.max(np.abs(cov.F)) + np.sum(cov.eigenvalues * np.max(np.abs(cov.eigenfields), axis=1) ** 2))


@dataclass
class MomentCheck:
    passed: bool
    times: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    bound: np.ndarray


def moment_growth_check(run: LimitRun, cov: CovarianceModel, T, check_times=None):
    """E||rho(t)||^2 <= exp(C t) E||rho_0||^2 within 3 standard errors."""
    C = gronwall_constant(cov)
    if check_times is None:
        check_times = (0.5 * T, T)
    idx = [int(np.argmin(np.abs(run.times - t))) for t in check_times]
    vals = run.l2_sq[:, idx]
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / np.sqrt(vals.shape[0])
    bound = np.exp(C * run.times[idx]) * run.l2_sq[:, 0].mean()
    return MomentCheck(bool(np.all(mean <= bound + 3 * se)), run.times[idx], mean, se, bound)


def constant_noise_covariance(nx, q):
    """Rank-one covariance with the constant eigenfield F_1 = 1."""
    from .covariance import assemble
    return assemble(np.full((nx, nx), float(q)))


def lognormal_second_moment(rho0, K, q, t):
    """E||rho(t)||^2 for constant noise: rho = rho_heat exp(sqrt(q) B_t), so e^{2qt}||rho_heat||^2."""
    from .kinetic import heat_solution
    h = heat_solution(np.asarray(rho0, dtype=float), K, t)
    return float(np.exp(2 * q * t) * spectral.l2_inner(h, h))
