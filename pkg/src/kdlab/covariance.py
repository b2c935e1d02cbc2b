"""Covariance kernel k, the operator Q, its eigenpairs and diagnostics."""

from dataclasses import dataclass
import warnings

import numpy as np
from scipy import linalg

from . import driver as drv
from . import spectral


class CovarianceError(ValueError):
    pass


@dataclass(frozen=True)
class CovarianceModel:
    kernel: np.ndarray       # k(x_i, x_j)
    eigenvalues: np.ndarray  # q_i, descending
    eigenfields: np.ndarray  # F_i on the grid, shape (n, nx), discrete L2-orthonormal
    F: np.ndarray            # k(x, x)

    @property
    def nx(self):
        return self.kernel.shape[0]

    @property
    def trace(self):
        return float(self.eigenvalues.sum())

    def apply(self, g):
        """(Qg)(x) = int k(x, y) g(y) dy."""
        return np.asarray(g) @ self.kernel.T / self.nx

    def truncated(self, rtol=1e-12):
        """Eigenpairs with q_i above rtol * q_max (the active noise directions)."""
        q = self.eigenvalues
        keep = q > rtol * max(q.max(), 0.0) if q.max() > 0 else np.zeros(q.size, bool)
        return q[keep], self.eigenfields[keep]


def assemble(kernel, neg_tol=1e-10):
    """Dense symmetric eigendecomposition of the quadrature-weighted kernel."""
    k = np.asarray(kernel, dtype=float)
    k = 0.5 * (k + k.T)
    nx = k.shape[0]
    dx = 1.0 / nx
    q, v = linalg.eigh(k * dx)
    if q.min() < -neg_tol:
        raise CovarianceError(f"kernel has a negative eigenvalue {q.min():.3e}")
    q = np.where(q < 0, 0.0, q)
    order = np.argsort(q)[::-1]
    q = q[order]
    Fi = v[:, order].T / np.sqrt(dx)
    return CovarianceModel(k, q, Fi, np.diag(k).copy())


def from_driver(params):
    return assemble(drv.analytic_kernel(params))


def mercer_reconstruct(model, n_terms=None):
    q, Fi = model.eigenvalues, model.eigenfields
    if n_terms is not None:
        q, Fi = q[:n_terms], Fi[:n_terms]
    return (Fi.T * q) @ Fi


def c1_summability_report(model):
    """Partial sums of sum_i q_i ||F_i||_{C^1}^2 in eigenvalue order."""
    terms = model.eigenvalues * spectral.c1_norm(model.eigenfields) ** 2
    return np.cumsum(terms)


def saturation_index(partial, rtol=1e-8):
    """Number of terms after which every further increment is below rtol * total."""
    total = partial[-1]
    if total == 0:
        return 0
    inc = np.diff(np.concatenate([[0.0], partial]))
    big = np.nonzero(inc >= rtol * total)[0]
    return int(big[-1] + 1) if big.size else 0


@dataclass
class KernelEstimate:
    kernel: np.ndarray
    se: np.ndarray
    samples: int


def estimate_kernel_mc(params, horizon, samples, rng, dt=None, two_sided=False):
    """Monte Carlo estimate of int_R E[m(0)(x) m(t)(y)] dt.

    The one-sided version integrates [0, T*] by the trapezoid rule over exact
    OU steps and doubles it.  The two-sided version integrates over
    [-T*, T*], drawing the backward half as an independent forward path from
    the same m(0), which has the right law because the OU field is reversible.
    """
    if samples < 100:
        warnings.warn("fewer than 100 samples: kernel estimate is statistically weak")
    if np.exp(-params.theta * horizon) > 1e-6:
        warnings.warn("horizon does not make the tail below 1e-6")
    if dt is None:
        dt = 0.01 / params.theta
    n = int(np.ceil(horizon / dt))
    dt = horizon / n
    m0 = drv.stationary_sample(params, rng, size=samples).coeffs

    def forward_integral():
        st = drv.DrivingState(m0.copy())
        acc = 0.5 * m0
        for i in range(1, n + 1):
            st = drv.step(st, params, dt, rng)
            acc = acc + (0.5 if i == n else 1.0) * st.coeffs
        return acc * dt

    I_fwd = forward_integral()
    if two_sided:
        I_bwd = forward_integral()
        A = np.einsum("si,sj->sij", m0, I_fwd) + np.einsum("si,sj->sij", I_bwd, m0)
    else:
        A = 2.0 * np.einsum("si,sj->sij", m0, I_fwd)
    E = drv.basis(params.J, params.nx)
    per_sample = np.einsum("ix,sij,jy->sxy", E, A, E, optimize=True)
    mean = per_sample.mean(axis=0)
    se = per_sample.std(axis=0, ddof=1) / np.sqrt(samples)
    return KernelEstimate(mean, se, samples)


def two_term_identity(params, n_samples, rng):
    """Check k = int psi R0 psi dnu + int (R0 psi) psi dnu by sampling nu.

    For psi = n(x) and phi = n(y), R0 of a linear functional divides by theta,
    so each term is E[n(x) n(y)] / theta and their sum must equal k.  Returns
    the two Monte Carlo terms and their standard errors.
    """
    st = drv.stationary_sample(params, rng, size=n_samples)
    field = drv.evaluate(st.coeffs, params)
    r0 = field / params.theta
    t1 = np.einsum("sx,sy->sxy", field, r0)
    t2 = np.einsum("sx,sy->sxy", r0, field)
    se = (t1 + t2).std(axis=0, ddof=1) / np.sqrt(n_samples)
    return t1.mean(axis=0), t2.mean(axis=0), se
