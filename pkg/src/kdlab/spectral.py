"""Fourier helpers on the periodic unit interval.

All fields live on the uniform grid x_i = i / Nx.  The last axis of an array
is the spatial axis unless stated otherwise.
"""

import numpy as np


def grid(nx):
    return np.arange(nx) / nx


def wavenumbers(nx):
    """Integer frequencies in numpy FFT order."""
    return np.fft.fftfreq(nx, d=1.0 / nx)


def derivative(u, order=1, axis=-1):
    """Spectral derivative of a real periodic field.

    The Nyquist coefficient is dropped for odd orders so the result stays
    real; even orders keep it.
    """
    nx = u.shape[axis]
    ell = wavenumbers(nx)
    mult = (2j * np.pi * ell) ** order
    if order % 2 == 1 and nx % 2 == 0:
        mult[nx // 2] = 0.0
    shape = [1] * u.ndim
    shape[axis] = nx
    uh = np.fft.fft(u, axis=axis)
    return np.real(np.fft.ifft(uh * mult.reshape(shape), axis=axis))


def shift(u, disp, axis=-1):
    """Translate a periodic field: returns u(x - disp) exactly for band-limited u.

    ``disp`` broadcasts against ``u`` with the spatial axis removed.
    """
    nx = u.shape[axis]
    ell = wavenumbers(nx)
    u = np.moveaxis(u, axis, -1)
    disp = np.asarray(disp, dtype=float)[..., None]
    phase = np.exp(-2j * np.pi * ell * disp)
    if nx % 2 == 0:
        # keep the Nyquist mode real by symmetrizing its phase
        phase[..., nx // 2] = np.cos(np.pi * nx * disp[..., 0])
    out = np.real(np.fft.ifft(np.fft.fft(u, axis=-1) * phase, axis=-1))
    return np.moveaxis(out, -1, axis)


def l2_inner(u, v):
    """Discrete L2 pairing on the unit torus (sum over the last axis)."""
    return np.sum(u * v, axis=-1) / u.shape[-1]


def l2_norm(u):
    return np.sqrt(l2_inner(u, u))


def c1_norm(u):
    """sup|u| + sup|u'| on the grid."""
    return np.max(np.abs(u), axis=-1) + np.max(np.abs(derivative(u)), axis=-1)


def normalized_coefficients(u):
    """Fourier coefficients with the mean as the zeroth entry."""
    return np.fft.fft(u, axis=-1) / u.shape[-1]


def sobolev_norm_sq(u, s):
    """Squared H^s norm, sum_l (1 + 4 pi^2 l^2)^s |u_l|^2 (s may be negative)."""
    nx = u.shape[-1]
    w = (1.0 + 4.0 * np.pi**2 * wavenumbers(nx) ** 2) ** s
    return np.sum(w * np.abs(normalized_coefficients(u)) ** 2, axis=-1)
