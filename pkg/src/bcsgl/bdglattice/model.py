"""Lattice discretization of the rescaled one-dimensional BCS problem."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import InvalidArgument
from ..fields import ExternalFields
from ..pairing import InteractionPotential

# minimal number of lattice sites per microscopic length h
MIN_SITES_PER_H = 16
DEFAULT_SITES_PER_H = 32


def periodic_difference(x):
    """Representative of ``x`` modulo 1 in ``[-1/2, 1/2)``."""
    return (np.asarray(x) + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class LatticeModel:
    """``N`` sites ``x_i = i/N`` on the macroscopic circle ``[0, 1)``.

    The one-body operator is ``(-i h d/dx + h A)^2 - mu + h^2 W`` and the
    interaction matrix is ``V(|x_i - x_j| / h)`` with the periodic distance.
    """

    h: float
    T: float
    mu: float
    potential: InteractionPotential
    fields: ExternalFields = field(default_factory=lambda: ExternalFields.none(1))
    N: int | None = None

    def __post_init__(self):
        if not (self.h > 0 and np.isfinite(self.h)):
            raise InvalidArgument("h must be positive")
        if not (self.T > 0 and np.isfinite(self.T)):
            raise InvalidArgument("temperature must be positive")
        if self.potential.dimension != 1 or self.fields.dimension != 1 or self.fields.L != 1.0:
            raise InvalidArgument("the lattice model is one-dimensional on [0, 1)")
        N = int(round(DEFAULT_SITES_PER_H / self.h)) if self.N is None else int(self.N)
        if N * self.h < MIN_SITES_PER_H - 1e-9:
            raise InvalidArgument(f"N = {N} gives fewer than {MIN_SITES_PER_H} sites per microscopic length")
        object.__setattr__(self, "N", N)

    @classmethod
    def from_D(cls, h, D, T_c, mu, potential, fields=None, N=None):
        """Temperature ``T = T_c (1 - D h^2)``."""
        T = T_c * (1.0 - D * h * h)
        fields = ExternalFields.none(1) if fields is None else fields
        return cls(h, T, mu, potential, fields, N)

    @property
    def a(self):
        return 1.0 / self.N

    @cached_property
    def x(self):
        return np.arange(self.N) / self.N

    @cached_property
    def separation(self):
        """Signed periodic separations ``x_i - x_j``."""
        return periodic_difference(self.x[:, None] - self.x[None, :])

    @cached_property
    def interaction(self):
        """``V(|x_i - x_j| / h)``, a real symmetric circulant matrix."""
        row = self.potential(np.abs(periodic_difference(self.x)) / self.h)
        idx = (np.arange(self.N)[:, None] - np.arange(self.N)[None, :]) % self.N
        return np.asarray(row)[idx]

    @cached_property
    def momenta(self):
        return 2 * np.pi * np.fft.fftfreq(self.N, 1.0 / self.N)

    @cached_property
    def one_body(self):
        """``D^* D - mu + h^2 W`` with ``D = -i h d/dx + h A`` built spectrally."""
        N, h = self.N, self.h
        F = np.fft.fft(np.eye(N), axis=0) / np.sqrt(N)
        D = (F.conj().T * (h * self.momenta)) @ F
        A = self.fields.A[0]
        if not A.is_zero:
            D = D + h * np.diag(A(self.x))
        hk = D.conj().T @ D
        hk = 0.5 * (hk + hk.conj().T)
        hk -= self.mu * np.eye(N)
        if not self.fields.W.is_zero:
            hk += h * h * np.diag(self.fields.W(self.x))
        if self.fields.is_zero:
            hk = hk.real.astype(complex)
        return hk

    @cached_property
    def free_dispersion(self):
        """Lattice dispersion ``(h p)^2 - mu`` valid without fields."""
        return (self.h * self.momenta) ** 2 - self.mu

    def with_temperature(self, T):
        return LatticeModel(self.h, T, self.mu, self.potential, self.fields, self.N)

    def describe(self):
        return {"h": self.h, "N": self.N, "T": self.T, "mu": self.mu, "fields": self.fields.to_json()}
