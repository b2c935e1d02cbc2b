"""Spectral Ornstein-Uhlenbeck driving field on the unit torus.

The field is m(x) = sum_j m_j e_j(x) in the real basis
e_0 = 1, e_{2j-1} = sqrt2 cos(2 pi j x), e_{2j} = sqrt2 sin(2 pi j x), j = 1..J.
Each coefficient is an independent scalar OU process
dm_j = -theta m_j dt + sigma_j dW_j.
"""

from dataclasses import dataclass, field

import numpy as np

from . import spectral


@dataclass(frozen=True)
class OUParams:
    theta: float
    sigma: np.ndarray  # one amplitude per basis function, length 2J+1
    nx: int
    dim: int = 1

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, "sigma", sigma)
        if self.theta <= 0:
            raise ValueError("damping theta must be positive")
        if sigma.ndim != 1 or sigma.size % 2 != 1:
            raise ValueError("sigma needs 2J+1 entries")
        if np.any(sigma < 0):
            raise ValueError("amplitudes must be nonnegative")
        if self.dim != 1:
            raise NotImplementedError("only d=1 fields are implemented")

    @property
    def J(self):
        return (self.sigma.size - 1) // 2

    @property
    def n_modes(self):
        return self.sigma.size

    @property
    def stationary_var(self):
        return self.sigma**2 / (2.0 * self.theta)

    @property
    def e_order(self):
        """Highest derivative order in the E-norm, 2 floor(d/2) + 4."""
        return 2 * (self.dim // 2) + 4


def make_params(J=4, theta=1.0, scale=1.0, decay=2.0, sin_ratio=1.0, nx=64):
    """sigma_j = scale / (1 + j)^decay, with the sine partner scaled by sin_ratio."""
    sig = [scale]
    for j in range(1, J + 1):
        s = scale / (1.0 + j) ** decay
        sig += [s, sin_ratio * s]
    return OUParams(theta, np.array(sig), nx)


def frequencies(J):
    return np.concatenate([[0], np.repeat(np.arange(1, J + 1), 2)])


def derivative_basis(J, nx, order):
    """Exact order-p derivative of every basis function on the grid, shape (2J+1, nx)."""
    x = spectral.grid(nx)
    out = np.empty((2 * J + 1, nx))
    out[0] = 1.0 if order == 0 else 0.0
    for j in range(1, J + 1):
        k = 2 * np.pi * j
        ph = order * np.pi / 2
        out[2 * j - 1] = np.sqrt(2) * k**order * np.cos(k * x + ph)
        out[2 * j] = np.sqrt(2) * k**order * np.sin(k * x + ph)
    return out


def basis(J, nx):
    return derivative_basis(J, nx, 0)


@dataclass
class DrivingState:
    coeffs: np.ndarray  # (..., 2J+1)
    t: float = 0.0


def stationary_sample(params, rng, size=()):
    size = tuple(np.atleast_1d(size)) if size != () else ()
    xi = rng.standard_normal(size + (params.n_modes,))
    return DrivingState(xi * np.sqrt(params.stationary_var), 0.0)


def transition_coefficients(params, dt):
    """(decay, noise std) of the exact OU transition over dt."""
    theta = params.theta
    decay = np.exp(-theta * dt)
    std = params.sigma * np.sqrt(-np.expm1(-2.0 * theta * dt) / (2.0 * theta))
    return decay, std


def step(state, params, dt, rng=None, normals=None):
    """Exact OU transition; pass either a generator or pre-drawn normals."""
    if dt <= 0:
        raise ValueError("time step must be positive")
    decay, std = transition_coefficients(params, dt)
    if normals is None:
        normals = rng.standard_normal(state.coeffs.shape)
    return DrivingState(decay * state.coeffs + std * normals, state.t + dt)


def evaluate(coeffs, params):
    """Synthesize the field on the grid; coeffs (..., 2J+1) -> (..., nx)."""
    return np.asarray(coeffs) @ basis(params.J, params.nx)


def e_norm(coeffs, params):
    """Sum over derivative orders 0..2floor(d/2)+4 of the grid sup norm."""
    coeffs = np.asarray(coeffs)
    total = 0.0
    for p in range(params.e_order + 1):
        total = total + np.max(np.abs(coeffs @ derivative_basis(params.J, params.nx, p)), axis=-1)
    return total


@dataclass(frozen=True)
class RescaledDriver:
    """View of t -> m(t / eps^2): stepping by dt advances the base process by dt/eps^2."""

    params: OUParams
    eps: float

    def base_dt(self, dt):
        return dt / self.eps**2

    def step(self, state, dt, rng=None, normals=None):
        new = step(state, self.params, self.base_dt(dt), rng, normals)
        return DrivingState(new.coeffs, state.t + dt)

    @property
    def correlation_time(self):
        return self.eps**2 / self.params.theta

    def transition_coefficients(self, dt):
        return transition_coefficients(self.params, self.base_dt(dt))


def mixing_rate(params):
    """gamma(t) = C exp(-theta t) for synchronously coupled fields.

    All modes share the damping theta, so the noiseless difference contracts
    every basis direction by the same factor and C = 1 in the E-norm.
    """
    C = 1.0
    theta = params.theta
    return lambda t: C * np.exp(-theta * np.asarray(t, dtype=float))


def analytic_kernel(params):
    """k(x, y) = sum_j sigma_j^2 / theta^2 e_j(x) e_j(y) on the grid."""
    E = basis(params.J, params.nx)
    k = (E.T * (params.sigma**2 / params.theta**2)) @ E
    return 0.5 * (k + k.T)


def stationary_covariance(params):
    """Grid covariance E[m(x) m(y)] under the invariant law."""
    E = basis(params.J, params.nx)
    return (E.T * params.stationary_var) @ E


@dataclass
class HypothesisAudit:
    gamma: float
    b: float
    alpha: float
    window: tuple = field(default=(0.0, 1.0 / 3.0))
    admissible: bool = True


def audit_hypotheses(alpha, gamma=np.inf, b=1.0):
    """Check alpha against the window (2/gamma, 1/(b+2)).

    A Gaussian field has moments of every order, so gamma defaults to infinity
    and the lower end is 0.  b = 1 holds for OU: the conditional mean decays
    and the conditional second moment grows at most linearly in |n|.
    """
    lo = 0.0 if np.isinf(gamma) else 2.0 / gamma
    hi = 1.0 / (b + 2.0)
    return HypothesisAudit(gamma, b, alpha, (lo, hi), bool(lo < alpha < hi))
