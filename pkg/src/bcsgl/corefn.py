"""Special functions for the pairing criterion and the GL coefficient integrals.

Units: k_B = hbar = 2m = 1, so the free dispersion is q**2 - mu.

All functions accept scalars or arrays and return the same kind. Inputs must be
finite; anything else raises :class:`~bcsgl.errors.InvalidArgument`.
"""

import numpy as np
from scipy.special import entr

from .errors import DomainError, InvalidArgument

SERIES_THRESHOLD = 1e-3
ENTROPY_BAND = 1e-12
# |E|/T beyond which Fermi factors are returned as exact 0 or 1.
FERMI_SATURATION = 600.0

# Taylor coefficients of g1(z) = sum c_k z**(2k+1) and g2(z) = sum d_k z**(2k).
_G1_SERIES = (1 / 12, -1 / 60, 17 / 6720, -31 / 90720, 691 / 15966720, -5461 / 1037836800)
_G2_SERIES = (1 / 4, -1 / 12, 17 / 960, -31 / 10080, 691 / 1451520, -5461 / 79833600)


def _as_finite(x, name="argument"):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} must be finite")
    return arr


def _check_temperature(T):
    T = float(T)
    if not np.isfinite(T) or T <= 0:
        raise InvalidArgument(f"temperature must be positive and finite, got {T!r}")
    return T


def _out(arr, like):
    return arr.item() if np.ndim(like) == 0 else arr.reshape(np.shape(like))


def _even_series(coeffs, z2):
    acc = np.zeros_like(z2)
    for c in reversed(coeffs):
        acc = acc * z2 + c
    return acc


def kt_eval(eta, T):
    """``eta / tanh(eta / 2T)``, equal to ``2T`` at ``eta = 0`` and >= 2T everywhere.

    ``T`` may be an array broadcasting against ``eta``.
    """
    if np.ndim(T) == 0:
        T = _check_temperature(T)
        like = eta
    else:
        T = np.asarray(T, dtype=float)
        if not np.all(np.isfinite(T) & (T > 0)):
            raise InvalidArgument("temperature must be positive and finite")
        like = np.broadcast_to(np.asarray(eta, dtype=float), np.broadcast_shapes(np.shape(eta), T.shape))
    eta_a, T_a = np.broadcast_arrays(_as_finite(like, "eta"), np.atleast_1d(T))
    x = eta_a / (2.0 * T_a)
    small = np.abs(x) < 1e-4
    out = np.empty_like(x)
    xs = x[small]
    x2 = xs * xs
    out[small] = 2.0 * T_a[small] * (1.0 + x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2**3 / 945.0)
    big = ~small
    out[big] = eta_a[big] / np.tanh(x[big])
    return _out(out, like)


def kt_dT(eta, T):
    """Temperature derivative of :func:`kt_eval`, ``eta**2 / (2 T**2 sinh**2(eta/2T))``."""
    T = _check_temperature(T)
    eta_a = _as_finite(eta, "eta")
    x = np.abs(eta_a) / (2.0 * T)
    # x / sinh x = 2x e^{-x} / (1 - e^{-2x})
    ratio = np.ones_like(x)
    nz = x > 1e-8
    with np.errstate(under="ignore"):
        ratio[nz] = 2.0 * x[nz] * np.exp(-x[nz]) / -np.expm1(-2.0 * x[nz])
    return _out(2.0 * ratio**2, eta)


def _sinh_minus_identity(z):
    # sinh z - z by its Taylor series, accurate to ~1e-20 for |z| <= 1.
    z2 = z * z
    term = z * z2 / 6.0
    acc = term.copy()
    for k in range(2, 11):
        term = term * z2 / ((2 * k) * (2 * k + 1))
        acc = acc + term
    return acc


def g1_eval(z):
    """``(e^{2z} - 2z e^z - 1) / (z^2 (1 + e^z)^2)``, odd in z, g1(z) ~ z/12 near 0."""
    za = _as_finite(z, "z")
    az = np.abs(za)
    out = np.empty_like(za)

    s = az < SERIES_THRESHOLD
    out[s] = za[s] * _even_series(_G1_SERIES, za[s] ** 2)

    # Same expression after multiplying through by e^{-z}: (sinh z - z) / (z^2 (1 + cosh z)).
    m = (~s) & (az <= 1.0)
    zm = za[m]
    out[m] = _sinh_minus_identity(zm) / (zm * zm * (1.0 + np.cosh(zm)))

    b = az > 1.0
    ab = az[b]
    with np.errstate(under="ignore", over="ignore"):
        u = np.exp(-ab)
        out[b] = np.sign(za[b]) * (1.0 - 2.0 * ab * u - u * u) / (ab * ab * (1.0 + u) ** 2)
    return _out(out, z)


def g1_over_z(z):
    """``g1(z) / z`` with the removable singularity at 0 filled by 1/12. Always positive."""
    za = _as_finite(z, "z")
    out = np.empty_like(za)
    s = np.abs(za) < SERIES_THRESHOLD
    out[s] = _even_series(_G1_SERIES, za[s] ** 2)
    out[~s] = g1_eval(za[~s]) / za[~s]
    return _out(out, z)


def g2_eval(z):
    """``2 e^z (e^z - 1) / (z (e^z + 1)^3)``; even, equal to 1/4 at z = 0."""
    za = _as_finite(z, "z")
    az = np.abs(za)
    out = np.empty_like(za)
    s = az < SERIES_THRESHOLD
    out[s] = _even_series(_G2_SERIES, za[s] ** 2)
    b = ~s
    ab = az[b]
    with np.errstate(under="ignore"):
        u = np.exp(-ab)
    # tanh(z/2) sech^2(z/2) / (2z) with both factors expressed through u = e^{-|z|}
    tanh_half = -np.expm1(-ab) / (1.0 + u)
    sech2_half = 4.0 * u / (1.0 + u) ** 2
    out[b] = tanh_half * sech2_half / (2.0 * ab)
    return _out(out, z)


def sech2_half(z):
    """``cosh(z/2)**-2`` without overflow."""
    za = _as_finite(z, "z")
    with np.errstate(under="ignore"):
        u = np.exp(-np.abs(za))
    return _out(4.0 * u / (1.0 + u) ** 2, z)


def fermi_fill(E, T):
    """Fermi-Dirac occupation ``1 / (1 + e^{E/T})``.

    Saturates to exactly 0 or 1 once ``|E|/T`` exceeds ``FERMI_SATURATION``.
    """
    T = _check_temperature(T)
    x = _as_finite(E, "eigenvalue") / T
    out = 0.5 * (1.0 - np.tanh(0.5 * x))
    # tanh loses the tail; use the exponential form where the occupation is small
    pos = x > 1.0
    with np.errstate(under="ignore"):
        out[pos] = np.exp(-x[pos]) / (1.0 + np.exp(-x[pos]))
    out[x >= FERMI_SATURATION] = 0.0
    out[x <= -FERMI_SATURATION] = 1.0
    return _out(out, E)


def softplus(x):
    """``log(1 + e^x)`` without overflow."""
    return np.logaddexp(0.0, x)


def entropy_scalar(x):
    """``-x ln x`` on [0, 1] with ``0 ln 0 = 0``.

    Values within ``ENTROPY_BAND`` outside the interval are clamped; anything
    further out raises :class:`~bcsgl.errors.DomainError`.
    """
    xa = _as_finite(x, "occupation")
    if np.any(xa < -ENTROPY_BAND) or np.any(xa > 1.0 + ENTROPY_BAND):
        raise DomainError("occupation outside [0, 1]")
    return _out(entr(np.clip(xa, 0.0, 1.0)), x)
