"""Ginzburg-Landau functional on a periodic box and its minimization.

    E(psi) = int |(-i grad + 2A) psi|^2 + lambda1 W |psi|^2 - lambda2 |psi|^2 + lambda3 |psi|^4

``psi`` is a trigonometric polynomial with modes ``|k_j| <= M``. All integrals
are evaluated on a zero-padded FFT grid fine enough that the uniform rule is
exact for every term (including ``|psi|^4``), so the discrete energy is the
exact continuum energy of the represented ``psi``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.fft import fftn, ifftn, next_fast_len
from scipy.optimize import minimize

from .errors import AccuracyError, ConvergenceError, InvalidArgument
from .fields import ExternalFields


@dataclass(frozen=True)
class Torus:
    dimension: int = 1
    L: float = 1.0
    M: int = 16

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise InvalidArgument("dimension must be 1, 2 or 3")
        if not self.L > 0 or self.M < 0:
            raise InvalidArgument("need L > 0 and M >= 0")

    @property
    def shape(self):
        return (2 * self.M + 1,) * self.dimension

    @property
    def volume(self):
        return self.L**self.dimension

    def wavenumbers(self):
        """Arrays ``2 pi k_j / L`` broadcast over the mode box, one per axis."""
        k = 2 * np.pi * np.arange(-self.M, self.M + 1) / self.L
        return [
            k.reshape([-1 if a == j else 1 for a in range(self.dimension)]) for j in range(self.dimension)
        ]

    def refined(self, factor=2):
        return Torus(self.dimension, self.L, self.M * factor)


@dataclass
class OrderParameterField:
    """Fourier coefficients ``c[k + M]`` of ``psi(x) = sum_k c_k exp(2 pi i k.x / L)``."""

    geometry: Torus
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != self.geometry.shape:
            raise InvalidArgument(f"coefficient shape {self.coeffs.shape} != {self.geometry.shape}")

    @classmethod
    def zeros(cls, geometry):
        return cls(geometry, np.zeros(geometry.shape, dtype=complex))

    @classmethod
    def constant(cls, geometry, value):
        c = np.zeros(geometry.shape, dtype=complex)
        c[(geometry.M,) * geometry.dimension] = value
        return cls(geometry, c)

    def to_real(self):
        return np.concatenate([self.coeffs.real.ravel(), self.coeffs.imag.ravel()])

    @classmethod
    def from_real(cls, geometry, v):
        n = v.size // 2
        return cls(geometry, (v[:n] + 1j * v[n:]).reshape(geometry.shape))

    def values(self, n=None):
        """``psi`` on the uniform grid with ``n`` points per axis (default ``4M + 2``)."""
        g = self.geometry
        n = 4 * g.M + 2 if n is None else int(n)
        if n < 2 * g.M + 1:
            raise InvalidArgument("grid too coarse for the represented modes")
        return _synthesis(self.coeffs, g.M, n)

    def __call__(self, x):
        """``psi`` at arbitrary points ``x`` of shape ``(..., d)`` (or ``(...)`` for d = 1)."""
        g = self.geometry
        x = np.asarray(x, dtype=float)
        if g.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        ks = np.array(list(itertools.product(range(-g.M, g.M + 1), repeat=g.dimension)), dtype=float)
        phase = np.exp(2j * np.pi * (x @ ks.T) / g.L)
        return phase @ self.coeffs.ravel()

    def l2_norm_sq(self):
        return self.geometry.volume * float(np.sum(np.abs(self.coeffs) ** 2))

    def rotated(self, theta):
        return OrderParameterField(self.geometry, self.coeffs * np.exp(1j * theta))

    def modulus_cut(self, n=None, axis=0):
        """``(x, |psi|)`` along one coordinate axis through the origin."""
        vals = np.abs(self.values(n))
        idx = [0] * self.geometry.dimension
        idx[axis] = slice(None)
        cut = vals[tuple(idx)]
        x = np.arange(cut.size) * self.geometry.L / cut.size
        return x, cut


def _embed_index(M, n, d):
    idx = np.arange(-M, M + 1) % n
    return np.ix_(*([idx] * d))


def _synthesis(c, M, n):
    d = c.ndim
    arr = np.zeros((n,) * d, dtype=complex)
    arr[_embed_index(M, n, d)] = c
    return ifftn(arr, overwrite_x=True) * n**d


def _analysis_adjoint(f, M, n):
    return fftn(f)[_embed_index(M, f.shape[0], f.ndim)]


class GLProblem:
    """Energy and gradient of the GL functional for fixed fields and coefficients."""

    def __init__(self, fields: ExternalFields, coeffs, geometry: Torus):
        if fields.dimension != geometry.dimension or fields.L != geometry.L:
            raise InvalidArgument("fields and order parameter live on different tori")
        self.fields = fields
        self.geometry = geometry
        self.lambda1 = float(coeffs.lambda1)
        self.lambda2 = float(coeffs.lambda2)
        self.lambda3 = float(coeffs.lambda3)
        M, d = geometry.M, geometry.dimension
        band = max(4 * M, 2 * (M + max(a.bandwidth for a in fields.A)), 2 * M + fields.W.bandwidth)
        self.n = next_fast_len(band + 1)
        self.weight = geometry.volume / self.n**d
        self.kappa = geometry.wavenumbers()
        self.A = [a.on_grid(self.n) for a in fields.A]
        self.A_active = [not a.is_zero for a in fields.A]
        self.potential = self.lambda1 * fields.W.on_grid(self.n) - self.lambda2
        self.psi_scale = np.sqrt(max(abs(self.lambda2), 1e-3) / (2 * self.lambda3)) if self.lambda3 > 0 else 1.0
        # size of the gradient of a psi of typical amplitude; makes tolerances relative
        op = (
            sum(float(np.max(k * k)) for k in self.kappa)
            + 4.0 * sum(float(np.max(a * a)) for a in self.A)
            + float(np.max(np.abs(self.potential)))
            + 2.0 * abs(self.lambda3) * self.psi_scale**2
        )
        self.gradient_scale = 2.0 * geometry.volume * op * self.psi_scale

    def _check(self, psi):
        if psi.geometry != self.geometry:
            raise InvalidArgument("order parameter geometry does not match the problem")

    def _parts(self, c):
        M, n = self.geometry.M, self.n
        psi = _synthesis(c, M, n)
        u = []
        for j, kap in enumerate(self.kappa):
            uj = _synthesis(c * kap, M, n)
            if self.A_active[j]:
                uj = uj + 2.0 * self.A[j] * psi
            u.append(uj)
        return psi, u

    def energy_coeffs(self, c):
        psi, u = self._parts(c)
        rho = psi.real**2 + psi.imag**2
        density = sum(uj.real**2 + uj.imag**2 for uj in u) + self.potential * rho + self.lambda3 * rho * rho
        return self.weight * float(np.sum(density))

    def energy_and_gradient_coeffs(self, c):
        M, n = self.geometry.M, self.n
        psi, u = self._parts(c)
        rho = psi.real**2 + psi.imag**2
        density = sum(uj.real**2 + uj.imag**2 for uj in u) + self.potential * rho + self.lambda3 * rho * rho
        energy = self.weight * float(np.sum(density))
        # everything multiplying plain psi is collected before one adjoint transform
        local = (self.potential + 2.0 * self.lambda3 * rho) * psi
        grad = np.zeros_like(c)
        for j, kap in enumerate(self.kappa):
            grad += kap * _analysis_adjoint(u[j], M, n)
            if self.A_active[j]:
                local = local + 2.0 * self.A[j] * u[j]
        grad += _analysis_adjoint(local, M, n)
        return energy, 2.0 * self.weight * grad

    def energy(self, psi: OrderParameterField):
        self._check(psi)
        return self.energy_coeffs(psi.coeffs)

    def gradient(self, psi: OrderParameterField):
        """Cotangent in coefficient space: ``dE/dRe c + i dE/dIm c``."""
        self._check(psi)
        return OrderParameterField(self.geometry, self.energy_and_gradient_coeffs(psi.coeffs)[1])

    def real_objective(self, v):
        e, g = self.energy_and_gradient_coeffs(OrderParameterField.from_real(self.geometry, v).coeffs)
        return e, np.concatenate([g.real.ravel(), g.imag.ravel()])


def gl_energy(psi: OrderParameterField, fields: ExternalFields, coeffs):
    return GLProblem(fields, coeffs, psi.geometry).energy(psi)


def gl_gradient(psi: OrderParameterField, fields: ExternalFields, coeffs):
    return GLProblem(fields, coeffs, psi.geometry).gradient(psi)


def field_free_minimum(coeffs, geometry: Torus):
    """``(|psi|^2, energy)`` of the minimizer without fields: uniform or zero."""
    lam2, lam3 = float(coeffs.lambda2), float(coeffs.lambda3)
    if lam2 <= 0:
        return 0.0, 0.0
    return lam2 / (2 * lam3), -(lam2**2) / (4 * lam3) * geometry.volume


@dataclass
class MinimizeOptions:
    restarts: int = 3
    gtol: float = 1e-12  # relative to GLProblem.gradient_scale
    maxiter: int = 20000
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise InvalidArgument("need at least one restart")
        if not self.gtol > 0:
            raise InvalidArgument("gradient tolerance must be positive")


@dataclass
class _Candidate:
    start: str
    psi: OrderParameterField
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str = ""
    trace: list = field(default_factory=list)

    def summary(self):
        return {
            "start": self.start,
            "energy": self.energy,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "message": self.message,
        }


def _starts(problem, opts, rng):
    g = problem.geometry
    lam2, lam3 = problem.lambda2, problem.lambda3
    scale = problem.psi_scale
    starts = []
    if lam2 > 0:
        starts.append(("uniform", OrderParameterField.constant(g, np.sqrt(lam2 / (2 * lam3)))))
    noise = rng.standard_normal((2,) + g.shape)
    starts.append(("zero-perturbed", OrderParameterField(g, 1e-3 * scale * (noise[0] + 1j * noise[1]))))
    while len(starts) < opts.restarts:
        noise = rng.standard_normal((2,) + g.shape)
        kk = sum(w**2 for w in g.wavenumbers())
        damp = 1.0 / (1.0 + kk * (g.L / (2 * np.pi)) ** 2)
        starts.append((f"random-{len(starts)}", OrderParameterField(g, scale * damp * (noise[0] + 1j * noise[1]))))
    return starts[: opts.restarts]


def _descend(problem, name, psi0, opts):
    trace = []

    def record(intermediate_result):
        trace.append(float(intermediate_result.fun))

    res = minimize(
        problem.real_objective,
        psi0.to_real(),
        jac=True,
        method="L-BFGS-B",
        callback=record,
        # ftol is absolute for |E| < 1 in L-BFGS-B, which would stop tiny-energy descents early
        options={
            "maxiter": opts.maxiter,
            "maxfun": 4 * opts.maxiter,
            "gtol": opts.gtol * problem.gradient_scale,
            "ftol": 0.0,
            "maxcor": 20,
        },
    )
    psi = OrderParameterField.from_real(problem.geometry, res.x)
    e, g = problem.energy_and_gradient_coeffs(psi.coeffs)
    gnorm = float(np.max(np.abs(g))) / problem.gradient_scale if g.size else 0.0
    # a line-search failure at the rounding floor still counts when the gradient is small
    converged = gnorm <= opts.gtol or gnorm <= 1e-9
    return _Candidate(name, psi, e, gnorm, int(res.nit), bool(converged), str(res.message), trace)


def gl_minimize(fields: ExternalFields, coeffs, geometry: Torus, opts: MinimizeOptions | None = None):
    """Minimize from several starts and return ``(psi_min, energy, diagnostics)``.

    ``psi = 0`` is always included as a candidate (it is a critical point).
    The best candidate has the lowest energy; near-ties go to the smallest
    gradient norm.
    """
    opts = MinimizeOptions() if opts is None else opts
    problem = GLProblem(fields, coeffs, geometry)
    rng = np.random.default_rng(opts.seed)
    cands = [_Candidate("zero", OrderParameterField.zeros(geometry), 0.0, 0.0, 0, True, "exact critical point")]
    for name, psi0 in _starts(problem, opts, rng):
        cands.append(_descend(problem, name, psi0, opts))
    good = [c for c in cands[1:] if c.converged]
    if not good:
        best = min(cands[1:], key=lambda c: c.energy)
        if best.energy >= 0:
            # no descent converged but none went below the zero state either
            best = None
        if best is not None:
            raise ConvergenceError(
                f"GL minimization did not reach gradient tolerance {opts.gtol:g} "
                f"(best gradient {best.grad_norm:.3e})",
                best=best.psi,
                trace=[c.summary() for c in cands],
            )
    pool = [cands[0]] + good
    e_min = min(c.energy for c in pool)
    tie = 1e-12 * max(1.0, abs(e_min))
    best = min((c for c in pool if c.energy <= e_min + tie), key=lambda c: (c.grad_norm, c.energy))
    energies = [c.energy for c in good]
    diagnostics = {
        "seed": opts.seed,
        "modes_per_axis": 2 * geometry.M + 1,
        "quadrature_points_per_axis": problem.n,
        "best_start": best.start,
        "grad_norm": best.grad_norm,
        "restart_spread": (max(energies) - min(energies)) if energies else 0.0,
        "restarts": [c.summary() for c in cands],
        "energy_trace": best.trace,
    }
    return best.psi, best.energy, diagnostics


def quadratic_form_matrix(fields: ExternalFields, lambda1, geometry: Torus):
    """Galerkin matrix of ``(-i grad + 2A)^2 + lambda1 W`` on the mode box.

    Built directly from the Fourier modes of ``A`` and ``W`` (no quadrature),
    normalized by the volume so that its eigenvalues are Rayleigh quotients.
    """
    if fields.dimension != geometry.dimension or fields.L != geometry.L:
        raise InvalidArgument("fields and order parameter live on different tori")
    d, M, L = geometry.dimension, geometry.M, geometry.L
    ks = np.array(list(itertools.product(range(-M, M + 1), repeat=d)), dtype=int)
    kap = 2 * np.pi * ks / L
    H = np.diag(np.sum(kap * kap, axis=1)).astype(complex)

    def conv_table(modes):
        return dict(modes)

    Ahat = [conv_table(a.modes) for a in fields.A]
    AA = {}
    for tab in Ahat:
        for p, cp in tab.items():
            for q, cq in tab.items():
                key = tuple(x + y for x, y in zip(p, q))
                AA[key] = AA.get(key, 0) + cp * cq
    What = conv_table(fields.W.modes)
    diff = ks[:, None, :] - ks[None, :, :]

    def lookup(table):
        out = np.zeros(diff.shape[:2], dtype=complex)
        for key, val in table.items():
            mask = np.all(diff == np.asarray(key), axis=-1)
            out[mask] += val
        return out

    for j in range(d):
        if Ahat[j]:
            H += 2.0 * (kap[:, None, j] + kap[None, :, j]) * lookup(Ahat[j])
    if AA:
        H += 4.0 * lookup(AA)
    if What and lambda1 != 0:
        H += lambda1 * lookup(What)
    return H


def lambda2_threshold(fields: ExternalFields, lambda1, geometry: Torus):
    """Largest ``lambda2`` for which ``psi = 0`` minimizes: the lowest eigenvalue of the quadratic part."""
    H = quadratic_form_matrix(fields, lambda1, geometry)
    try:
        vals = sla.eigh(H, eigvals_only=True, subset_by_index=[0, 0])
    except (sla.LinAlgError, ValueError) as exc:
        raise AccuracyError(f"eigensolver failed for the GL quadratic form: {exc}") from exc
    return float(vals[0])


def _per_D(coeffs):
    per_D = float(coeffs.lambda2_per_D)
    if not per_D > 0:
        raise InvalidArgument("lambda2 must grow with D to convert a threshold into D*")
    return per_D


def critical_d(fields: ExternalFields, coeffs, geometry: Torus):
    """Threshold ``D*``: ``psi = 0`` is a GL minimizer iff ``D <= D*``."""
    return lambda2_threshold(fields, coeffs.lambda1, geometry) / _per_D(coeffs)


def critical_d_bisection(fields, coeffs, geometry, opts=None, rel_tol=1e-5, max_steps=80):
    """Same threshold from the sign of the minimized GL energy, by bisection in D."""
    per_D = _per_D(coeffs)
    opts = MinimizeOptions(restarts=2) if opts is None else opts
    lam1 = float(coeffs.lambda1)
    lo = lam1 * (fields.W.minimum_bound() if lam1 >= 0 else _max_bound(fields.W)) - 1.0
    a2 = sum(sum(abs(c) ** 2 for _, c in a.modes) for a in fields.A)
    hi = 4.0 * a2 + lam1 * fields.W.mean + 1.0
    lo, hi = lo / per_D, hi / per_D

    def unstable(D):
        _, e, _ = gl_minimize(fields, coeffs.with_D(D), geometry, opts)
        return e < 0.0

    if unstable(lo) or not unstable(hi):
        raise AccuracyError(f"GL energy sign does not bracket the threshold on [{lo}, {hi}]")
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_tol * max(abs(lo), abs(hi), 1e-300):
            break
    else:
        raise ConvergenceError("bisection for D* did not converge", best=0.5 * (lo + hi))
    return 0.5 * (lo + hi)


def _max_bound(f):
    zero = (0,) * f.dimension
    return f.mean + sum(abs(c) for k, c in f.modes if k != zero)
