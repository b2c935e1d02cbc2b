"""Discrete velocity models and the BGK relaxation operator.

A phase-space field f has shape (..., Nx, Nv): spatial grid first, velocity
nodes last.  Velocity integrals are exact weighted sums over the nodes.
"""

from dataclasses import dataclass

import numpy as np


class ModelError(ValueError):
    """Raised for an invalid velocity model or a shape mismatch."""


@dataclass(frozen=True)
class VelocityModel:
    weights: np.ndarray      # mu_k, sums to one
    equilibrium: np.ndarray  # M_k > 0, sum M_k mu_k = 1
    velocity: np.ndarray     # a_k, shape (Nv, d)
    name: str = "custom"

    def __post_init__(self):
        mu = np.asarray(self.weights, dtype=float)
        M = np.asarray(self.equilibrium, dtype=float)
        a = np.asarray(self.velocity, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        object.__setattr__(self, "weights", mu)
        object.__setattr__(self, "equilibrium", M)
        object.__setattr__(self, "velocity", a)
        if not (mu.shape == M.shape == a.shape[:1]):
            raise ModelError("weights, equilibrium and velocity disagree in length")
        if abs(mu.sum() - 1.0) > 1e-12:
            raise ModelError("velocity weights must sum to one")
        if np.any(mu < 0):
            raise ModelError("velocity weights must be nonnegative")
        if M.min() <= 0:
            raise ModelError("equilibrium must be positive")
        if abs(np.sum(M * mu) - 1.0) > 1e-12:
            raise ModelError("equilibrium must integrate to one")
        if np.linalg.norm(np.sum(a * (M * mu)[:, None], axis=0)) > 1e-12:
            raise ModelError("velocity field is not centred for M dmu")

    @property
    def nv(self):
        return self.weights.size

    @property
    def dim(self):
        return self.velocity.shape[1]

    @property
    def a_sup(self):
        """||a||_{L^inf} (Euclidean length of the fastest node)."""
        return float(np.max(np.linalg.norm(self.velocity, axis=1)))

    @property
    def a_l2m(self):
        """||a||_{L^2(M dmu)}."""
        sq = np.sum(self.velocity**2, axis=1)
        return float(np.sqrt(np.sum(sq * self.equilibrium * self.weights)))


def two_velocity():
    """Symmetric model a = +-1, M = 1, mu = (1/2, 1/2)."""
    return VelocityModel(np.array([0.5, 0.5]), np.ones(2), np.array([1.0, -1.0]), "two")


def four_velocity_2d():
    a = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    return VelocityModel(np.full(4, 0.25), np.ones(4), a, "four2d")


def hermite(n, vmax=3.0):
    """Gauss-Hermite nodes clipped to [-vmax, vmax], uniform mu, Gaussian M.

    The nodes come in symmetric pairs so the centring condition holds exactly.
    """
    if n < 2:
        raise ModelError("hermite model needs at least two nodes")
    x, w = np.polynomial.hermite_e.hermegauss(n)
    x = np.clip(x, -vmax, vmax)
    x = 0.5 * (x - x[::-1])
    M = w / w.sum() * n
    M = 0.5 * (M + M[::-1])
    mu = np.full(n, 1.0 / n)
    M = M / np.sum(M * mu)
    return VelocityModel(mu, M, x, f"hermite{n}")


def make_model(kind="two", nodes=2):
    if kind == "two":
        return two_velocity()
    if kind == "hermite":
        return hermite(int(nodes))
    if kind == "four2d":
        return four_velocity_2d()
    raise ModelError(f"unknown velocity model {kind!r}")


def _check(model, f):
    f = np.asarray(f)
    if f.ndim < 2 or f.shape[-1] != model.nv:
        raise ModelError(f"field shape {f.shape} does not match {model.nv} velocity nodes")
    return f


def density(model, f):
    """rho(x) = sum_k f(x, k) mu_k."""
    f = _check(model, f)
    return f @ model.weights


def equilibrium_field(model, rho):
    """The local equilibrium rho(x) M_k."""
    return np.asarray(rho)[..., None] * model.equilibrium


def bgk_apply(model, f):
    """Lf = rho M - f."""
    f = _check(model, f)
    return equilibrium_field(model, density(model, f)) - f


def diffusion_matrix(model):
    """K = sum_k a_k a_k^T M_k mu_k; rejects a degenerate model."""
    a = model.velocity
    K = np.einsum("ki,kj,k->ij", a, a, model.equilibrium * model.weights)
    if not np.allclose(K, K.T, atol=1e-14):
        raise ModelError("diffusion matrix is not symmetric")
    if np.linalg.eigvalsh(K).min() <= 1e-12:
        raise ModelError("diffusion matrix is not positive definite")
    return K


def fspace_norm(model, f):
    """Weighted L2 norm with weight M^{-1} dmu, dx on the unit torus."""
    f = _check(model, f)
    nx = np.prod(f.shape[-1 - model.dim:-1])
    w = model.weights / model.equilibrium
    sq = np.sum(f**2 * w, axis=-1)
    return np.sqrt(np.sum(sq.reshape(*sq.shape[: sq.ndim - model.dim], -1), axis=-1) / nx)
