"""Quasi-free states on the lattice, the BCS free energy and entropy inequalities.

A state is the ``2N x 2N`` matrix ``Gamma = [[gamma, alpha], [conj(alpha), 1 - conj(gamma)]]``
with ``alpha`` symmetric. ``alpha`` holds lattice matrix elements, i.e. the
pair kernel at ``(x_i, x_j)`` times the spacing ``a``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..corefn import ENTROPY_BAND, entropy_scalar, fermi_fill, kt_eval, softplus
from ..errors import DivergenceError, InvalidArgument, StateInvariantError, SymmetryError
from .model import LatticeModel, periodic_difference

log = logging.getLogger(__name__)

BLOCK_TOL = 1e-10


def _hermitian_eigh(M):
    E, W = np.linalg.eigh(0.5 * (M + M.conj().T))
    return E, W


@dataclass
class PairingOperatorH:
    """BdG operator ``[[h, Delta], [conj(Delta), -conj(h)]]``."""

    one_body: np.ndarray
    delta: np.ndarray

    @property
    def N(self):
        return self.one_body.shape[0]

    @cached_property
    def matrix(self):
        h, d = self.one_body, self.delta
        return np.block([[h, d], [d.conj(), -h.conj()]])

    @cached_property
    def spectrum(self):
        """Eigenvalues (ascending) and eigenvectors of the full operator."""
        return _hermitian_eigh(self.matrix)

    def scaled(self, c):
        return PairingOperatorH(c * self.one_body, c * self.delta)


@dataclass
class BdGState:
    """``Gamma`` plus, for Gibbs states, the generator ``Gamma = (1 + exp(E/T))^-1``.

    Spectral logarithms are taken from the generator when it is known, which
    keeps them exact where the occupations themselves underflow.
    """

    Gamma: np.ndarray
    energies: np.ndarray | None = None
    vectors: np.ndarray | None = None
    T: float | None = None

    @property
    def N(self):
        return self.Gamma.shape[0] // 2

    @property
    def gamma(self):
        return self.Gamma[: self.N, : self.N]

    @property
    def alpha(self):
        return self.Gamma[: self.N, self.N :]

    @property
    def has_generator(self):
        return self.energies is not None

    @classmethod
    def from_blocks(cls, gamma, alpha):
        gamma = np.asarray(gamma, dtype=complex)
        alpha = np.asarray(alpha, dtype=complex)
        N = gamma.shape[0]
        G = np.block([[gamma, alpha], [alpha.conj(), np.eye(N) - gamma.conj()]])
        return cls(G)

    @classmethod
    def gibbs(cls, H: PairingOperatorH, T):
        if not T > 0:
            raise InvalidArgument("temperature must be positive")
        E, W = H.spectrum
        occ = fermi_fill(E, T)
        G = (W * occ) @ W.conj().T
        return cls(0.5 * (G + G.conj().T), E, W, float(T))

    def block_error(self):
        N = self.N
        G = self.Gamma
        herm = np.max(np.abs(G - G.conj().T))
        lower = np.max(np.abs(G[N:, N:] - (np.eye(N) - self.gamma.conj())))
        off = np.max(np.abs(G[N:, :N] - self.alpha.conj()))
        sym = np.max(np.abs(self.alpha - self.alpha.T))
        return float(max(herm, lower, off, sym))

    def check_blocks(self, tol=BLOCK_TOL):
        err = self.block_error()
        if err > tol:
            raise SymmetryError(f"state violates the BdG block structure by {err:.3e}")
        return err

    @cached_property
    def _spectral(self):
        """``(occupations, eigenvectors, log occ, log(1 - occ))``."""
        if self.has_generator:
            occ = fermi_fill(self.energies, self.T)
            x = self.energies / self.T
            return occ, self.vectors, -softplus(x), -softplus(-x)
        lam, V = _hermitian_eigh(self.Gamma)
        if lam[0] < -ENTROPY_BAND or lam[-1] > 1 + ENTROPY_BAND:
            raise StateInvariantError(f"state eigenvalues leave [0, 1]: [{lam[0]:.3e}, {lam[-1]:.3e}]")
        lam = np.clip(lam, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return lam, V, np.log(lam), np.log1p(-lam)

    def occupations(self):
        return self._spectral[0]

    def check_range(self, tol=BLOCK_TOL):
        if self.has_generator:
            return
        lam = np.linalg.eigvalsh(0.5 * (self.Gamma + self.Gamma.conj().T))
        if lam[0] < -tol or lam[-1] > 1 + tol:
            raise StateInvariantError(f"state eigenvalues leave [0, 1]: [{lam[0]:.3e}, {lam[-1]:.3e}]")

    def entropy(self):
        """``-Tr Gamma ln Gamma`` over the full ``2N`` space."""
        occ, _, lo, _ = self._spectral
        if self.has_generator:
            terms = np.where(occ > 0, -occ * lo, 0.0)
            return float(np.sum(terms))
        return float(np.sum(entropy_scalar(occ)))

    def neg_binary_entropy(self):
        """``Tr[Gamma ln Gamma + (1 - Gamma) ln(1 - Gamma)]``."""
        occ, _, lo, l1 = self._spectral
        t1 = np.where(occ > 0, occ * lo, 0.0)
        t2 = np.where(occ < 1, (1 - occ) * l1, 0.0)
        return float(np.sum(t1 + t2))


def normal_state(model: LatticeModel) -> BdGState:
    """Gibbs state of the one-body operator, ``alpha = 0``."""
    return BdGState.gibbs(PairingOperatorH(model.one_body, np.zeros_like(model.one_body)), model.T)


def normal_free_energy_closed_form(model: LatticeModel):
    """``-T sum_p ln(1 + exp(-eps_p / T))`` on the lattice momenta (no fields)."""
    if not model.fields.is_zero:
        raise InvalidArgument("closed form only holds without external fields")
    return float(-model.T * np.sum(softplus(-model.free_dispersion / model.T)))


def pair_energy(alpha, model: LatticeModel):
    return float(np.sum(model.interaction * np.abs(alpha) ** 2))


def bcs_free_energy(state: BdGState, model: LatticeModel):
    """``Tr[h gamma] - T S(Gamma) + sum_ij V_ij |alpha_ij|^2``."""
    if state.N != model.N:
        raise InvalidArgument("state and model sizes differ")
    state.check_range()
    kinetic = float(np.real(np.sum(model.one_body * state.gamma.T)))
    return kinetic - model.T * state.entropy() + pair_energy(state.alpha, model)


def relative_entropy(G1: BdGState, G2: BdGState, support_tol=1e-12):
    """``Tr[G1 (ln G1 - ln G2) + (1 - G1)(ln(1 - G1) - ln(1 - G2))]``, clipped at 0."""
    if G1.N != G2.N:
        raise InvalidArgument("states of different size")
    own = G1.neg_binary_entropy()
    occ2, V2, lo2, l12 = G2._spectral
    p = np.real(np.einsum("ik,ik->k", V2.conj(), G1.Gamma @ V2))
    q = 1.0 - p
    bad = (np.isinf(lo2) & (p > support_tol)) | (np.isinf(l12) & (q > support_tol))
    if np.any(bad):
        raise DivergenceError("first state has weight where the second is exactly 0 or 1")
    cross = np.sum(np.where(np.isinf(lo2), 0.0, p * lo2) + np.where(np.isinf(l12), 0.0, q * l12))
    value = own - float(cross)
    if value < -1e-9 * max(1.0, abs(own)):
        log.warning("relative entropy came out negative (%.3e)", value)
    return max(value, 0.0)


def kt_quadratic(state: BdGState, H: PairingOperatorH, T, reference: BdGState):
    """``Tr[K_T(H) (Gamma - Gamma_ref)^2]`` by the spectral calculus of ``H``."""
    E, W = H.spectrum
    Y = (state.Gamma - reference.Gamma) @ W
    return float(np.sum(kt_eval(E, T) * np.sum(np.abs(Y) ** 2, axis=0)))


def entropy_bound_check(G: BdGState, H: PairingOperatorH, T, rel_tol=1e-9):
    """``T H(Gamma, Gamma_H) >= Tr[K_T(H)(Gamma - Gamma_H)^2]``; returns ``(lhs, rhs, pass)``."""
    G_H = BdGState.gibbs(H, T)
    lhs = T * relative_entropy(G, G_H)
    rhs = kt_quadratic(G, H, T, G_H)
    return lhs, rhs, bool(lhs >= rhs - rel_tol * abs(lhs))


def midpoint_index(model: LatticeModel):
    """Index ``m`` of the midpoint ``(x_i + x_j)/2 = m / (2N)`` taken along the shorter arc."""
    N = model.N
    j = np.arange(N)[None, :]
    sep = np.rint(model.separation * N).astype(int)  # x_i - x_j in lattice units
    return (2 * j + sep) % (2 * N)


def midpoint_pair(model: LatticeModel):
    """Both midpoint indices of every pair; they differ only for antipodal sites (even N)."""
    m1 = midpoint_index(model)
    antipodal = np.rint(np.abs(model.separation) * model.N).astype(int) * 2 == model.N
    return m1, np.where(antipodal, (m1 + model.N) % (2 * model.N), m1)


def pair_profile(pair, model: LatticeModel):
    """Matrix of ``a * alpha0((x_i - x_j)/h)``, built from its ``N`` distinct values."""
    N = model.N
    r = np.abs(periodic_difference(np.arange(N) / N)) / model.h
    row = model.a * pair.alpha_position(r)
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    return row[idx]


def build_alpha_gl(psi0, pair, model: LatticeModel):
    """Matrix elements of ``psi0((x+y)/2) alpha0((x-y)/h)`` on the lattice.

    ``psi0`` is an order parameter on ``[0, 1)``, or ``None`` for zero.
    """
    if psi0 is None:
        return np.zeros((model.N, model.N), dtype=complex)
    half = psi0.values(2 * model.N)
    m1, m2 = midpoint_pair(model)
    # antipodal pairs have two midpoints; averaging keeps alpha symmetric
    return 0.5 * (half[m1] + half[m2]) * pair_profile(pair, model)


def assemble_hdelta(psi0, pair, model: LatticeModel, alpha_gl=None):
    alpha_gl = build_alpha_gl(psi0, pair, model) if alpha_gl is None else alpha_gl
    return PairingOperatorH(model.one_body, 2.0 * model.interaction * alpha_gl)


def gibbs_state(H: PairingOperatorH, T, tol=BLOCK_TOL):
    state = BdGState.gibbs(H, T)
    state.check_blocks(tol)
    return state


def energy_identity_check(G: BdGState, psi0, pair, model: LatticeModel, alpha_gl=None):
    """Both sides of the exact decomposition of ``F(Gamma) - F(Gamma_0)``.

    Right side: ``-(T/2) Tr[ln(1 + e^{-H_Delta/T}) - ln(1 + e^{-H_0/T})] - sum V|alpha_GL|^2
    + (T/2) H(Gamma, Gamma_Delta) + sum V|alpha_GL - alpha|^2``. Returns
    ``(lhs, rhs, residual)`` with the residual relative to the largest of the two free
    energies and the four terms.
    """
    T = model.T
    alpha_gl = build_alpha_gl(psi0, pair, model) if alpha_gl is None else alpha_gl
    H = assemble_hdelta(None, pair, model, alpha_gl=alpha_gl)
    H0 = PairingOperatorH(model.one_body, np.zeros_like(model.one_body))
    G0 = BdGState.gibbs(H0, T)
    F, F0 = bcs_free_energy(G, model), bcs_free_energy(G0, model)
    lhs = F - F0

    E, _ = H.spectrum
    E0, _ = H0.spectrum
    terms = [
        -0.5 * T * float(np.sum(softplus(-E / T)) - np.sum(softplus(-E0 / T))),
        -pair_energy(alpha_gl, model),
        0.5 * T * relative_entropy(G, BdGState.gibbs(H, T)),
        pair_energy(alpha_gl - G.alpha, model),
    ]
    rhs = float(sum(terms))
    # both sides are differences of O(|F|) quantities, so rounding scales with |F|
    scale = max(abs(F), abs(F0), *(abs(t) for t in terms), 1e-300)
    return lhs, rhs, abs(lhs - rhs) / scale
