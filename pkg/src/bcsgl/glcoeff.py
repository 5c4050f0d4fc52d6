"""Ginzburg-Landau coefficients from the pair state.

With ``t`` the Fourier transform of ``2 K_{T_c} alpha0``, ``z = (q^2 - mu)/T_c``
and the measure ``dq / (2 pi)^d`` over R^d::

    lambda0 = 1/(16 T^2)  int t^2 [g1(z) + (2/d) beta q^2 g2(z)]
    lambda1 = 1/(4 T^2)   int t^2 g1(z)                 / lambda0
    lambda2 = D/(8 T)     int t^2 cosh^-2(z/2)          / lambda0
    lambda3 = 1/(16 T^2)  int t^4 g1(z)/(q^2 - mu)      / lambda0

``t`` uses the non-unitary transform ``t(q) = int e^{-iqx} (2 K alpha0)(x) dx``,
so that ``psi(X) alpha0(r)`` with the GL minimizer ``psi`` carries the
physical pair amplitude when ``alpha0`` is unit-normalized in position space.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad_vec, trapezoid

from .corefn import g1_eval, g1_over_z, g2_eval, kt_eval, sech2_half
from .errors import AccuracyError, InternalConsistencyError, InvalidArgument
from .pairing import PairState

CONVENTION = "t(q)=int exp(-iqx) 2K_Tc alpha0(x) dx; alpha0 unit L2 norm; measure dq/(2pi)^d"


@dataclass
class PairFormFactor:
    """``t`` on the radial grid plus an evaluator valid anywhere on ``[0, q_max]``."""

    q: np.ndarray
    t: np.ndarray
    pair: PairState = field(repr=False)
    convention: str = CONVENTION

    @property
    def dimension(self):
        return self.pair.dimension

    def __call__(self, q):
        return _t_from_alpha(self.pair, np.asarray(q, dtype=float))

    def via_kernel(self, q):
        """Second route through the eigen-equation: ``t = -2 (V alpha0)^``."""
        return -2.0 * (2 * np.pi) ** (self.dimension / 2) * self.pair.kernel_action(np.asarray(q, dtype=float))


def _t_from_alpha(pair, q):
    return 2.0 * (2 * np.pi) ** (pair.dimension / 2) * kt_eval(q**2 - pair.mu, pair.T_c) * pair.alpha_momentum(q)


def form_factor(pair: PairState) -> PairFormFactor:
    q = pair.grid.nodes
    t = 2.0 * (2 * np.pi) ** (pair.dimension / 2) * kt_eval(q**2 - pair.mu, pair.T_c) * pair.alpha0
    return PairFormFactor(q, t, pair)


@dataclass
class GLCoefficients:
    lambda0: float
    lambda1: float
    lambda2: float
    lambda3: float
    kappa: float | None
    T_c: float
    mu: float
    D: float
    dimension: int
    lambda2_per_D: float
    integrals: dict = field(default_factory=dict)
    quadrature: dict = field(default_factory=dict)
    convention: str = CONVENTION

    @property
    def beta_c(self):
        return 1.0 / self.T_c

    def with_D(self, D):
        """Same microscopic data at another temperature offset."""
        lam2 = self.lambda2_per_D * D
        out = GLCoefficients(**{**asdict(self), "D": float(D), "lambda2": lam2})
        out.kappa = math.sqrt(lam2) if lam2 > 0 else None
        return out

    def report(self):
        return {
            "tc": self.T_c,
            "mu": self.mu,
            "d": self.dimension,
            "D": self.D,
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "lambda3": self.lambda3,
            "kappa": self.kappa,
            "lambda2_per_D": self.lambda2_per_D,
            "integrals": dict(self.integrals),
            "grid": dict(self.quadrature),
            "convention": self.convention,
            "dimension_note": "1D integrands follow the dimension-generic form" if self.dimension == 1 else "",
        }


def _measure_factor(q, d):
    if d == 3:
        return q * q / (2.0 * np.pi**2)
    return np.full_like(q, 1.0 / np.pi)


def coefficient_integrands(t, q, T_c, mu, d):
    """Rows: the integrands behind lambda0..lambda3 (without prefactors), measure included."""
    beta = 1.0 / T_c
    z = beta * (q * q - mu)
    t2 = t * t
    m = _measure_factor(q, d)
    return np.array(
        [
            m * t2 * (g1_eval(z) + (2.0 / d) * beta * q * q * g2_eval(z)),
            m * t2 * g1_eval(z),
            m * t2 * sech2_half(z),
            m * t2 * t2 * beta * g1_over_z(z),
        ]
    )


def _assemble(I, T_c, mu, D, d, quadrature):
    lam0 = I[0] / (16.0 * T_c**2)
    if not lam0 > 0:
        raise InternalConsistencyError(f"lambda0 = {lam0:.3e} is not positive")
    lam1 = I[1] / (4.0 * T_c**2) / lam0
    per_D = I[2] / (8.0 * T_c) / lam0
    lam3 = I[3] / (16.0 * T_c**2) / lam0
    if not lam3 > 0:
        raise InternalConsistencyError(f"lambda3 = {lam3:.3e} is not positive")
    lam2 = per_D * D
    return GLCoefficients(
        lambda0=float(lam0),
        lambda1=float(lam1),
        lambda2=float(lam2),
        lambda3=float(lam3),
        kappa=math.sqrt(lam2) if lam2 > 0 else None,
        T_c=float(T_c),
        mu=float(mu),
        D=float(D),
        dimension=int(d),
        lambda2_per_D=float(per_D),
        integrals={f"I{k}": float(v) for k, v in enumerate(I)},
        quadrature=quadrature,
    )


def compute_coefficients(ff: PairFormFactor, T_c, mu, D, d=None, rel_tol=1e-11):
    """Evaluate the four coefficient integrals by adaptive Gauss-Kronrod quadrature.

    Breakpoints sit at the Fermi momentum and at the edges of the thermal shell
    ``|q^2 - mu| = 10 T_c``, where the integrands are peaked for small T_c.
    """
    d = ff.dimension if d is None else d
    if d not in (1, 3):
        raise InvalidArgument("dimension must be 1 or 3")
    q_max = float(ff.q[-1]) if ff.pair is None else ff.pair.grid.q_max
    kf = math.sqrt(mu)
    shell = 10.0 * T_c / (2.0 * kf)
    points = sorted({p for p in (kf - shell, kf - 0.1 * shell, kf, kf + 0.1 * shell, kf + shell) if 0 < p < q_max})

    def f(q):
        qa = np.array([q])
        return coefficient_integrands(ff(qa), qa, T_c, mu, d)[:, 0]

    I, err, info = quad_vec(f, 0.0, q_max, epsabs=0.0, epsrel=rel_tol, points=points, limit=4000, full_output=True)
    if not info.success or np.any(err > 1e3 * rel_tol * np.abs(I)):
        raise AccuracyError(
            f"coefficient quadrature not converged: error estimates {err} for integrals {I} "
            f"after {info.intervals.shape[0]} intervals"
        )
    quadrature = {
        "method": "adaptive Gauss-Kronrod",
        "q_max": q_max,
        "breakpoints": points,
        "intervals": int(info.intervals.shape[0]),
        "max_rel_error_estimate": float(np.max(err / np.abs(I))),
        "pair_grid_nodes": int(ff.q.size),
    }
    return _assemble(I, T_c, mu, D, d, quadrature)


def dense_trapezoid_coefficients(ff: PairFormFactor, T_c, mu, D, d=None, n=None):
    """Reference evaluation by the trapezoid rule on a uniform grid.

    All integrands are smooth even functions of q that vanish at q_max, so the
    uniform rule converges spectrally; used as an oracle for
    :func:`compute_coefficients`.
    """
    d = ff.dimension if d is None else d
    n = 10 * ff.q.size if n is None else n
    q = np.linspace(0.0, ff.pair.grid.q_max, n + 1)
    I = trapezoid(coefficient_integrands(ff(q), q, T_c, mu, d), q, axis=1)
    return _assemble(I, T_c, mu, D, d, {"method": "trapezoid", "nodes": n + 1})


def gl_coefficients(pair: PairState, D, **kw):
    return compute_coefficients(form_factor(pair), pair.T_c, pair.mu, D, pair.dimension, **kw)
