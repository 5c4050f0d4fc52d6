"""Periodic external fields given by finitely many Fourier modes.

A field on the torus ``[0, L)^d`` is ``f(x) = sum_k c_k exp(2 pi i k.x / L)``.
Modes are supplied as ``{"k": [k1, ..., kd], "amp": [re, im]}``. Missing
partners ``-k`` are filled with the conjugate amplitude so that ``f`` is real;
a single mode ``{"k": [1], "amp": [a, 0]}`` therefore means ``2a cos(2 pi x/L)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class FourierField:
    dimension: int
    modes: tuple = ()  # ((k tuple, complex amplitude), ...) after Hermitian completion
    L: float = 1.0

    @classmethod
    def from_modes(cls, spec, dimension, L=1.0):
        table = {}
        for entry in spec or ():
            try:
                k = tuple(int(v) for v in entry["k"])
                re, im = entry.get("amp", (0.0, 0.0))
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidArgument(f"bad Fourier mode {entry!r}: {exc}") from exc
            if len(k) != dimension:
                raise InvalidArgument(f"mode {k} does not match dimension {dimension}")
            c = complex(float(re), float(im))
            if not np.isfinite(c):
                raise InvalidArgument(f"non-finite amplitude for mode {k}")
            table[k] = table.get(k, 0) + c
        zero = (0,) * dimension
        if zero in table and abs(table[zero].imag) > 0:
            raise InvalidArgument("the k = 0 amplitude of a real field must be real")
        full = dict(table)
        for k, c in table.items():
            mk = tuple(-v for v in k)
            if mk == k:
                continue
            if mk in table:
                if abs(table[mk] - c.conjugate()) > 1e-14 * max(1.0, abs(c)):
                    raise InvalidArgument(f"modes {k} and {mk} are not complex conjugates")
            else:
                full[mk] = c.conjugate()
        modes = tuple(sorted((k, c) for k, c in full.items() if c != 0))
        return cls(dimension, modes, float(L))

    @classmethod
    def constant(cls, value, dimension, L=1.0):
        return cls.from_modes([{"k": [0] * dimension, "amp": [value, 0.0]}], dimension, L)

    @property
    def is_zero(self):
        return not self.modes

    @property
    def bandwidth(self):
        """Largest |k| component over all modes (per axis)."""
        return max((max(abs(v) for v in k) for k, _ in self.modes), default=0)

    @property
    def mean(self):
        return dict(self.modes).get((0,) * self.dimension, 0.0).real

    def __call__(self, x):
        """Values at points ``x`` of shape ``(..., d)`` (or ``(...)`` when d = 1)."""
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        out = np.zeros(x.shape[:-1], dtype=complex)
        for k, c in self.modes:
            out += c * np.exp(2j * np.pi * (x @ np.asarray(k, dtype=float)) / self.L)
        return out.real

    def on_grid(self, n):
        """Values on the uniform grid with ``n`` points per axis, as a d-dim array."""
        axes = [np.arange(n) * self.L / n] * self.dimension
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return self(pts)

    def minimum_bound(self):
        """Lower bound ``c_0 - sum_{k != 0} |c_k|`` for the field values."""
        zero = (0,) * self.dimension
        return self.mean - sum(abs(c) for k, c in self.modes if k != zero)

    def to_json(self):
        return [{"k": list(k), "amp": [c.real, c.imag]} for k, c in self.modes]


@dataclass(frozen=True)
class ExternalFields:
    """Magnetic potential ``A`` (d components) and scalar potential ``W``."""

    dimension: int
    A: tuple = field(default=())
    W: FourierField | None = None
    L: float = 1.0

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise InvalidArgument("dimension must be 1, 2 or 3")
        if not self.L > 0:
            raise InvalidArgument("box length must be positive")
        A = tuple(self.A) or tuple(FourierField(self.dimension, (), self.L) for _ in range(self.dimension))
        if len(A) != self.dimension:
            raise InvalidArgument(f"A needs {self.dimension} components, got {len(A)}")
        object.__setattr__(self, "A", A)
        if self.W is None:
            object.__setattr__(self, "W", FourierField(self.dimension, (), self.L))
        for f in (*self.A, self.W):
            if f.dimension != self.dimension or f.L != self.L:
                raise InvalidArgument("field geometry does not match")

    @classmethod
    def none(cls, dimension, L=1.0):
        return cls(dimension, L=L)

    @classmethod
    def from_json(cls, spec, dimension, L=1.0):
        spec = spec or {}
        unknown = set(spec) - {"A", "W"}
        if unknown:
            raise InvalidArgument(f"unknown field keys {sorted(unknown)}")
        A_spec = spec.get("A") or [[] for _ in range(dimension)]
        if len(A_spec) != dimension:
            raise InvalidArgument(f"A needs {dimension} component lists")
        A = tuple(FourierField.from_modes(m, dimension, L) for m in A_spec)
        W = FourierField.from_modes(spec.get("W"), dimension, L)
        return cls(dimension, A, W, L)

    @property
    def is_zero(self):
        return self.W.is_zero and all(a.is_zero for a in self.A)

    @property
    def bandwidth(self):
        return max([self.W.bandwidth] + [a.bandwidth for a in self.A])

    def to_json(self):
        return {"A": [a.to_json() for a in self.A], "W": self.W.to_json()}
