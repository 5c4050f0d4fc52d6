"""Translation-invariant pairing criterion.

Finds the temperature at which ``K_T(-Laplacian - mu) + V`` acquires a zero
lowest eigenvalue, working on radial functions in momentum space. Momentum
functions use the unitary Fourier convention and are normalized in
``L^2(R^d)``; kernels act with respect to the full-space measure
(``4 pi q^2 dq`` in 3D, ``dq`` over the real line in 1D).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicSpline
from scipy.special import spherical_jn

from .corefn import kt_eval
from .errors import AccuracyError, DegeneratePairState, InvalidArgument, NoPairing

log = logging.getLogger(__name__)

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _panel_rule(edges, n):
    x, w = _leggauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


@dataclass(frozen=True)
class InteractionPotential:
    """Radial two-body potential V(r).

    ``kind`` is ``"gaussian"`` (``V = depth * exp(-r**2 / width**2)``, attractive
    for negative depth) or ``"tabulated"`` (cubic spline through ``(r, values)``,
    zero beyond the last sample).
    """

    kind: str
    dimension: int = 3
    depth: float = 0.0
    width: float = 1.0
    r: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.dimension not in (1, 3):
            raise InvalidArgument(f"dimension must be 1 or 3, got {self.dimension}")
        if self.kind == "gaussian":
            if not self.width > 0:
                raise InvalidArgument("gaussian width must be positive")
        elif self.kind == "tabulated":
            r = np.asarray(self.r, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or r.size < 4:
                raise InvalidArgument("tabulated potential needs at least 4 (r, V) samples")
            if np.any(np.diff(r) <= 0) or r[0] < 0:
                raise InvalidArgument("tabulated radii must be non-negative and strictly increasing")
            scale = max(np.max(np.abs(v)), 1.0)
            if abs(v[-1]) > 1e-12 * scale:
                raise InvalidArgument("tabulated potential does not decay at the end of the table")
            object.__setattr__(self, "r", r)
            object.__setattr__(self, "values", v)
            object.__setattr__(self, "_spline", CubicSpline(r, v, extrapolate=False))
        else:
            raise InvalidArgument(f"unknown potential kind {self.kind!r}")

    @classmethod
    def gaussian(cls, depth, width, dimension=3):
        return cls("gaussian", dimension=dimension, depth=float(depth), width=float(width))

    @classmethod
    def tabulated(cls, r, values, dimension=3):
        return cls("tabulated", dimension=dimension, r=r, values=values)

    @classmethod
    def from_file(cls, path, dimension=3):
        """Read a two-column ``r V(r)`` text file; ``#`` starts a comment."""
        data = np.loadtxt(Path(path), comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise InvalidArgument(f"{path}: expected two columns, found {data.shape[1]}")
        return cls.tabulated(data[:, 0], data[:, 1], dimension=dimension)

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == "gaussian":
            return self.depth * np.exp(-((r / self.width) ** 2))
        out = self._spline(r)
        out[np.isnan(out)] = 0.0
        return out

    @property
    def r_max(self):
        if self.kind == "gaussian":
            return 7.0 * self.width
        return float(self.r[-1])

    @property
    def length_scale(self):
        if self.kind == "gaussian":
            return self.width
        return self.r_max / 8.0

    @property
    def is_zero(self):
        if self.kind == "gaussian":
            return self.depth == 0.0
        return not np.any(self.values)

    def scaled(self, factor):
        if self.kind == "gaussian":
            return replace(self, depth=self.depth * factor)
        return InteractionPotential.tabulated(self.r, self.values * factor, self.dimension)


@dataclass(frozen=True)
class RadialGrid:
    """Gauss-Legendre panels on ``[0, q_max]``.

    ``weights`` integrate in ``dq``; ``measure`` adds the Jacobian of the full
    space (``4 pi q^2`` in 3D, a factor 2 for even functions on the line).
    """

    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    dimension: int
    nodes_per_panel: int

    @property
    def q_max(self):
        return float(self.edges[-1])

    @property
    def measure(self):
        if self.dimension == 3:
            return 4.0 * np.pi * self.nodes**2 * self.weights
        return 2.0 * self.weights

    def __len__(self):
        return self.nodes.size

    @classmethod
    def from_edges(cls, edges, nodes_per_panel, dimension):
        edges = np.unique(np.asarray(edges, dtype=float))
        nodes, weights = _panel_rule(edges, nodes_per_panel)
        return cls(nodes, weights, edges, dimension, nodes_per_panel)

    @classmethod
    def build(
        cls, mu, q_max, *, dimension=3, nodes_per_panel=16, temperature=None, outer_panels=None, smoothness=1.0
    ):
        """Panels split at the Fermi momentum with a refined thermal shell.

        The shell covers ``|q**2 - mu| <~ 10 T``; without a temperature hint it
        is a quarter of the Fermi momentum wide. Outer panels are sized by
        ``smoothness``, the momentum scale on which the kernel varies.
        """
        if not mu > 0:
            raise InvalidArgument("chemical potential must be positive")
        kf = math.sqrt(mu)
        if q_max <= 2 * kf:
            raise InvalidArgument("q_max must exceed twice the Fermi momentum")
        shell = 0.25 * kf if temperature is None else min(0.5 * kf, 10.0 * temperature / (2.0 * kf))
        edges = [0.0, kf, 2.0 * kf]
        for frac in (1.0, 0.3, 0.1):
            edges += [kf - frac * shell, kf + frac * shell]
        if outer_panels is None:
            outer_panels = max(4, int(math.ceil((q_max - 2 * kf) / (0.75 * min(kf, smoothness)))))
        edges += list(np.linspace(2.0 * kf, q_max, outer_panels + 1))
        edges = np.array([e for e in edges if 0.0 <= e <= q_max])
        return cls.from_edges(edges, nodes_per_panel, dimension)

    def refined(self, factor=2):
        return RadialGrid.from_edges(self.edges, self.nodes_per_panel * factor, self.dimension)


def _sector_function(dimension, sector):
    if dimension == 3:
        ell = int(sector)
        return lambda x: spherical_jn(ell, x), 1.0 / (2.0 * np.pi**2), 2
    if sector in (0, "even"):
        return np.cos, 1.0 / np.pi, 0
    if sector in (1, "odd"):
        return np.sin, 1.0 / np.pi, 0
    raise InvalidArgument(f"unknown 1D sector {sector!r}")


class SWaveKernel:
    """Momentum-space kernel of V restricted to one angular sector.

    3D: ``(1/2pi^2) int V(r) j_l(qr) j_l(q'r) r^2 dr``; 1D even (odd) sector:
    ``(1/pi) int_0^inf V(r) cos(qr) cos(q'r) dr`` (with ``sin``). The radial
    integral uses Gauss-Legendre panels fine enough to resolve ``cos(q_max r)``.
    """

    def __init__(self, potential: InteractionPotential, q_max, sector=0, panel_nodes=16):
        self.potential = potential
        self.sector = sector
        self.q_max = float(q_max)
        self._basis, self._prefactor, self._rpow = _sector_function(potential.dimension, sector)
        self._r, self._c = self._radial_rule(panel_nodes, 1.0)
        self._check_tail()
        self._check_convergence(panel_nodes)

    def _radial_rule(self, panel_nodes, density):
        r_max = self.potential.r_max
        dr = min(self.potential.length_scale / 2.0, np.pi / max(self.q_max, 1e-12))
        n_panels = max(4, int(math.ceil(density * r_max / dr)))
        edges = np.linspace(0.0, r_max, n_panels + 1)
        if self.potential.kind == "tabulated":
            edges = np.union1d(edges, self.potential.r[(self.potential.r > 0) & (self.potential.r < r_max)][:: max(1, self.potential.r.size // 64)])
        r, w = _panel_rule(edges, panel_nodes)
        c = self._prefactor * w * r**self._rpow * self.potential(r)
        return r, c

    def _check_tail(self):
        v = self.potential
        scale = max(float(np.max(np.abs(v(self._r)))), 1e-300)
        tail = abs(float(v(np.array([v.r_max]))[0])) * v.r_max ** self._rpow
        if tail > 1e-10 * scale * max(1.0, v.r_max ** self._rpow):
            raise AccuracyError(f"potential tail at r={v.r_max:g} is {tail:.3e}, above truncation tolerance")

    def _check_convergence(self, panel_nodes):
        if self.potential.is_zero:
            return
        q = np.linspace(0.0, self.q_max, 9)
        coarse_r, coarse_c = self._radial_rule(max(4, (3 * panel_nodes) // 4), 1.0)
        fine = self._eval(q, q, self._r, self._c)
        coarse = self._eval(q, q, coarse_r, coarse_c)
        err = np.max(np.abs(fine - coarse)) / max(np.max(np.abs(fine)), 1e-300)
        if err > 1e-8:
            raise AccuracyError(f"radial quadrature of the interaction kernel not converged (estimate {err:.2e})")

    def _eval(self, q, qp, r, c):
        bq = self._basis(np.outer(np.atleast_1d(q), r))
        bp = self._basis(np.outer(np.atleast_1d(qp), r))
        return (bq * c) @ bp.T

    def __call__(self, q, qp):
        return self._eval(q, qp, self._r, self._c)

    def radial_source(self, qp, f):
        """Coefficients ``s_k`` with ``sum_j V_0(q, qp_j) f_j = basis(q r) @ s``."""
        return self._c * (self._basis(np.outer(self._r, qp)) @ f)

    def apply(self, q, source):
        return self._basis(np.outer(np.atleast_1d(q), self._r)) @ source

    def matrix(self, grid: RadialGrid):
        m = self(grid.nodes, grid.nodes)
        return 0.5 * (m + m.T)


def swave_kernel(potential: InteractionPotential, grid: RadialGrid):
    """Symmetric matrix ``V_0(q_i, q_j)`` on the grid nodes."""
    return SWaveKernel(potential, grid.q_max).matrix(grid)


def assemble_operator(T, mu, kernel_matrix, grid: RadialGrid):
    """Symmetric matrix of ``K_T(q^2 - mu) + V`` in the weighted-L^2 basis."""
    s = np.sqrt(grid.measure)
    op = s[:, None] * kernel_matrix * s[None, :]
    op[np.diag_indices_from(op)] += kt_eval(grid.nodes**2 - mu, T)
    return op


def _lowest(op, k=2):
    return sla.eigh(op, subset_by_index=[0, k - 1])


def auto_q_max(potential: InteractionPotential, mu, rel_tol=1e-12, cap_factor=60.0):
    """Momentum beyond which the kernel no longer couples to the pairing region.

    The pair state is concentrated at ``q' <~ 2 k_F + 2 / range``; ``q_max`` is
    where ``max_q' |V_0(q, q')| / max(|q^2 - mu|, 1)`` over that region falls
    below ``rel_tol`` of its peak.
    """
    kf = math.sqrt(mu)
    scale = potential.length_scale
    if potential.is_zero:
        return max(4.0 * kf, 10.0 / scale)
    cap = max(cap_factor / scale, 4.0 * kf)
    probe = SWaveKernel(potential, cap, panel_nodes=16)
    qs = np.linspace(0.0, cap, 1201)
    source = np.linspace(0.0, 2.0 * kf + 2.0 / scale, 33)
    row = np.max(np.abs(probe(qs, source)), axis=1)
    decay = row / np.maximum(np.abs(qs**2 - mu), 1.0)
    above = np.nonzero(decay > rel_tol * decay.max())[0]
    q_max = qs[min(above[-1] + 1, qs.size - 1)]
    if q_max >= cap:
        log.warning("kernel has not decayed by q=%g; truncating there", cap)
    return float(max(q_max, 3.0 * kf))


@dataclass
class PairState:
    """Zero mode of ``K_{T_c} + V`` in the s-wave (1D: even) sector.

    ``alpha0`` holds momentum values at the grid nodes (unitary convention, unit
    ``L^2(R^d)`` norm under ``grid.measure``).
    """

    alpha0: np.ndarray
    T_c: float
    mu: float
    gap_to_next: float
    eigenvalue: float
    grid: RadialGrid
    kernel: SWaveKernel = field(repr=False)
    trace: list = field(default_factory=list, repr=False)

    @property
    def dimension(self):
        return self.grid.dimension

    def norm(self):
        return float(np.sqrt(np.sum(self.grid.measure * self.alpha0**2)))

    def scaled(self, factor):
        return replace(self, alpha0=self.alpha0 * factor)

    def kernel_action(self, q):
        """``(V alpha0)^(q)`` by the Nystrom sum over the grid."""
        return self.kernel.apply(q, self._source)

    @cached_property
    def _source(self):
        return self.kernel.radial_source(self.grid.nodes, self.grid.measure * self.alpha0)

    def alpha_momentum(self, q):
        """Nystrom interpolation from the eigen-equation, valid at any ``q <= q_max``."""
        q = np.asarray(q, dtype=float)
        return -self.kernel_action(q) / (kt_eval(q**2 - self.mu, self.T_c) - self.eigenvalue)

    def alpha_position(self, r):
        """Inverse unitary Fourier transform of the radial ``alpha0``."""
        r = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
        q = self.grid.nodes
        weight = self.grid.measure * self.alpha0
        if self.dimension == 1:
            return (2 * np.pi) ** -0.5 * (np.cos(np.outer(r, q)) @ weight)
        return (2 * np.pi) ** -1.5 * (spherical_jn(0, np.outer(r, q)) @ weight)

    def summary(self):
        return {
            "T_c": self.T_c,
            "mu": self.mu,
            "dimension": self.dimension,
            "eigenvalue": self.eigenvalue,
            "gap_to_next": self.gap_to_next,
            "grid_nodes": len(self.grid),
            "q_max": self.grid.q_max,
        }


def _bisect_tc(op_at, T_lo, T_hi, e_lo, e_hi, tol, trace, max_iter=200):
    best = (T_lo, e_lo) if abs(e_lo) < abs(e_hi) else (T_hi, e_hi)
    for _ in range(max_iter):
        T = 0.5 * (T_lo + T_hi)
        e = op_at(T)
        trace.append((T, e))
        if abs(e) < abs(best[1]):
            best = (T, e)
        if e < 0:
            T_lo = T
        else:
            T_hi = T
        if abs(best[1]) < tol and (T_hi - T_lo) < tol * T:
            break
        if T_hi - T_lo <= 4 * np.finfo(float).eps * T:
            break
    return best


def find_tc(
    potential: InteractionPotential,
    mu,
    grid: RadialGrid | None = None,
    tol=1e-10,
    T_min=None,
    nodes_per_panel=16,
):
    """Critical temperature and pair state of the linear criterion.

    Brackets the sign change of the lowest eigenvalue ``e(T)`` by doubling or
    halving from ``T = mu`` and bisects. Without an explicit grid, a first pass
    on a coarse-shell grid locates T_c and a second pass re-solves on a grid
    whose thermal shell matches it.
    """
    mu = float(mu)
    if not mu > 0:
        raise InvalidArgument("chemical potential must be positive")
    if not tol > 0:
        raise InvalidArgument("tolerance must be positive")
    T_min = 1e-10 * mu if T_min is None else T_min
    auto = grid is None
    if auto:
        q_max = auto_q_max(potential, mu)
        grid = RadialGrid.build(
            mu, q_max, dimension=potential.dimension, nodes_per_panel=nodes_per_panel,
            smoothness=1.0 / potential.length_scale,
        )
    elif grid.dimension != potential.dimension:
        raise InvalidArgument("grid and potential dimensions differ")

    kernel = SWaveKernel(potential, grid.q_max)
    trace: list[tuple[float, float]] = []

    def solve(grid, kernel):
        vmat = kernel.matrix(grid)

        def e_of(T):
            return float(_lowest(assemble_operator(T, mu, vmat, grid), 1)[0][0])

        T = mu
        e = e_of(T)
        trace.append((T, e))
        if e < 0:
            while e < 0:
                T_lo, e_lo = T, e
                T *= 2.0
                if T > 1e8 * mu:
                    raise AccuracyError("no upper bracket for the critical temperature")
                e = e_of(T)
                trace.append((T, e))
            T_hi, e_hi = T, e
        else:
            while e >= 0:
                T_hi, e_hi = T, e
                T *= 0.5
                if T < T_min:
                    raise NoPairing(f"lowest eigenvalue positive down to T={T_min:g}", trace=list(trace))
                e = e_of(T)
                trace.append((T, e))
            T_lo, e_lo = T, e
        T_c, e_c = _bisect_tc(e_of, T_lo, T_hi, e_lo, e_hi, tol, trace)
        return T_c, e_c, vmat

    T_c, e_c, vmat = solve(grid, kernel)
    if auto:
        grid = RadialGrid.build(
            mu, grid.q_max, dimension=potential.dimension, nodes_per_panel=nodes_per_panel,
            temperature=T_c, smoothness=1.0 / potential.length_scale,
        )
        T_c, e_c, vmat = solve(grid, kernel)

    evals, evecs = _lowest(assemble_operator(T_c, mu, vmat, grid), 2)
    gap = float(evals[1] - evals[0])
    if gap < tol:
        raise DegeneratePairState(f"lowest eigenvalue is degenerate (gap {gap:.2e})")
    if abs(evals[0]) > 10 * tol:
        raise AccuracyError(f"|e(T_c)| = {abs(evals[0]):.2e} exceeds tolerance")
    u = evecs[:, 0]
    alpha = u / np.sqrt(grid.measure)
    if np.sum(grid.measure * alpha) < 0:
        alpha = -alpha
    log.debug("T_c=%.12g e=%.2e gap=%.3g on %d nodes", T_c, evals[0], gap, len(grid))
    return PairState(alpha, float(T_c), mu, gap, float(evals[0]), grid, kernel, trace)


def sector_lowest(potential, mu, grid: RadialGrid, T, sector):
    kernel = SWaveKernel(potential, grid.q_max, sector=sector)
    return float(_lowest(assemble_operator(T, mu, kernel.matrix(grid), grid), 1)[0][0])


def validate_sector(potential, mu, grid: RadialGrid, T_c):
    """Lowest eigenvalue of ``K_{T_c} + V`` per angular sector.

    3D compares l = 0, 1, 2; 1D compares the even and odd sectors. The report
    flags whether the s-wave (even) sector is strictly lowest.
    """
    sectors = (0, 1, 2) if grid.dimension == 3 else ("even", "odd")
    values = {str(s): sector_lowest(potential, mu, grid, T_c, s) for s in sectors}
    first = str(sectors[0])
    others = [v for k, v in values.items() if k != first]
    return {
        "T_c": float(T_c),
        "lowest_by_sector": values,
        "s_wave_minimal": bool(all(values[first] < v for v in others)),
        "ordering": sorted(values, key=values.get),
    }
