"""Stopping times tau^eps, tau_Lambda and the auxiliary process zeta.

Times are evaluated on the sampling grid; np.inf marks "never crossed".
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .driver import audit_hypotheses


@dataclass(frozen=True)
class StoppingConfig:
    alpha: float = 0.3
    Lambda: float = 2.0
    T: float = 0.5
    b: float = 1.0
    gamma: float = np.inf

    def __post_init__(self):
        if self.Lambda <= 0:
            raise ValueError("Lambda must be positive")
        audit = audit_hypotheses(self.alpha, self.gamma, self.b)
        if not audit.admissible:
            raise ValueError(f"alpha={self.alpha} lies outside {audit.window}")

    def driver_threshold(self, eps):
        return eps ** (-self.alpha)


def eps_max(a_sup, Lambda):
    """Largest eps covered by the stopped energy bound, (4 |a|_inf Lambda)^-1."""
    return 1.0 / (4.0 * a_sup * Lambda)


def update_zeta(zeta, m_now, m_next, dt, eps):
    """Trapezoid step of zeta' = m^eps / eps."""
    return zeta + (dt / eps) * 0.5 * (m_now + m_next)


def _first(mask, times):
    """First time where mask holds along the last axis, inf if never."""
    mask = np.asarray(mask)
    hit = mask.any(axis=-1)
    idx = mask.argmax(axis=-1)
    return np.where(hit, np.asarray(times)[idx], np.inf)


def driver_stop(e_norms, times, eps, alpha):
    """tau^eps: first sample with ||m^eps||_E > eps^-alpha (strict)."""
    return _first(np.asarray(e_norms) > eps ** (-alpha), times)


def hitting_time(c1_norms, times, Lambda):
    """tau_Lambda: first sample with ||zeta||_C1 >= Lambda."""
    return _first(np.asarray(c1_norms) >= Lambda, times)


def combined(tau_eps, tau_lambda):
    return np.minimum(tau_eps, tau_lambda)


def freeze(series, times, tau):
    """Hold each path constant after its stopping time.

    series has shape (..., n_times, *rest); tau has shape (...).
    """
    series = np.asarray(series)
    times = np.asarray(times)
    tau = np.asarray(tau)
    idx = np.searchsorted(times, tau, side="left")
    idx = np.minimum(idx, times.size - 1)
    extra = series.ndim - tau.ndim - 1
    t_idx = np.arange(times.size).reshape((1,) * tau.ndim + (-1,) + (1,) * extra)
    stop_idx = idx.reshape(idx.shape + (1,) * (extra + 1))
    src = np.minimum(t_idx, stop_idx)
    return np.take_along_axis(series, np.broadcast_to(src, series.shape), axis=tau.ndim)


@dataclass
class StopRow:
    eps: float
    Lambda: float
    alpha: float
    p_hat: float
    ci_low: float
    ci_high: float
    n_traj: int


def exceedance(taus, T, eps, Lambda, alpha, level=0.95):
    """P(tau < T) with a Clopper-Pearson interval."""
    taus = np.asarray(taus)
    n = taus.size
    k = int(np.sum(taus < T))
    ci = stats.binomtest(k, n).proportion_ci(level, method="exact")
    return StopRow(eps, Lambda, alpha, k / n, ci.low, ci.high, n)


def stopping_statistics(tau_by_eps, T, Lambda, alpha):
    """One exceedance row per eps; tau_by_eps maps eps -> array of stopping times."""
    return [exceedance(t, T, e, Lambda, alpha) for e, t in tau_by_eps.items()]


def is_nonincreasing(rows, tol=0.0):
    """Point estimates ordered by decreasing eps never rise by more than tol."""
    rows = sorted(rows, key=lambda r: -r.eps)
    p = np.array([r.p_hat for r in rows])
    return bool(np.all(np.diff(p) <= tol))
