"""Self-consistent minimization of the lattice BCS functional.

The Gibbs map ``alpha -> alpha-block of (1 + exp(H[alpha]/T))^-1`` with
``Delta = 2 V alpha`` is iterated with Anderson acceleration. Whenever the free
energy of the new Gibbs state rises, the history is dropped and a damped step
from the best state so far is taken, halving the damping each time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError, InvalidArgument
from .model import LatticeModel
from .states import BdGState, PairingOperatorH, bcs_free_energy, normal_state


@dataclass
class SCFOptions:
    tol: float = 1e-10
    max_iter: int = 400
    history: int = 6
    mixing: float = 0.5
    tail: int = 3

    def __post_init__(self):
        if not self.tol > 0 or self.max_iter < 1 or self.history < 0 or not 0 < self.mixing <= 1:
            raise InvalidArgument("invalid self-consistency options")


@dataclass
class SCFResult:
    state: BdGState
    free_energy: float
    normal_free_energy: float
    converged: bool
    iterations: int
    is_normal: bool
    trace: list = field(default_factory=list)

    @property
    def alpha_norm(self):
        return float(np.linalg.norm(self.state.alpha))


def _gibbs_of(alpha, model):
    H = PairingOperatorH(model.one_body, 2.0 * model.interaction * alpha)
    return BdGState.gibbs(H, model.T)


def _anderson(X, R):
    """Type-II Anderson update from input history ``X`` and residual history ``R``."""
    dX = np.stack([X[i + 1] - X[i] for i in range(len(X) - 1)], axis=1)
    dR = np.stack([R[i + 1] - R[i] for i in range(len(R) - 1)], axis=1)
    gamma, *_ = np.linalg.lstsq(dR, R[-1], rcond=None)
    return X[-1] + R[-1] - (dX + dR) @ gamma


def self_consistent_minimize(model: LatticeModel, init=None, opts: SCFOptions | None = None):
    """Minimize over Gibbs states of self-consistent BdG operators.

    ``init`` is a :class:`BdGState`, an ``N x N`` pairing matrix, or ``None``
    (normal start, which is itself a fixed point). Returns an :class:`SCFResult`
    whose state is the lower of the converged state and the normal state.
    """
    opts = SCFOptions() if opts is None else opts
    N = model.N
    if init is None:
        alpha = np.zeros((N, N), dtype=complex)
    elif isinstance(init, BdGState):
        alpha = np.array(init.alpha, dtype=complex)
    else:
        alpha = np.array(init, dtype=complex)
    if alpha.shape != (N, N):
        raise InvalidArgument(f"initial pairing matrix must be {N}x{N}")
    alpha = 0.5 * (alpha + alpha.T)

    X, R, trace = [], [], []
    mixing = opts.mixing
    best = None  # (F, alpha_in, residual)
    prev_G = None
    F_hist = []
    converged = False
    G = None
    for it in range(1, opts.max_iter + 1):
        G = _gibbs_of(alpha, model)
        F = bcs_free_energy(G, model)
        out = 0.5 * (G.alpha + G.alpha.T)
        r = (out - alpha).ravel()
        dG = float(np.linalg.norm(G.Gamma - prev_G.Gamma)) if prev_G is not None else np.inf
        prev_G = G
        # F carries rounding noise of order 1e-13 |F| from the 2N-term spectral sums
        slack = 1e-11 * max(1.0, abs(F))
        step = "anderson"
        if best is not None and F > best[0] + slack:
            # energy went up: restart from the best input with a shorter damped step
            mixing *= 0.5
            X, R = [], []
            alpha = best[1] + mixing * best[2].reshape(N, N)
            step = "damped"
        else:
            if best is None or F <= best[0]:
                best = (F, alpha.copy(), r.copy())
            # an accepted step earns back step length lost to earlier overshoots
            mixing = min(opts.mixing, 2.0 * mixing)
            X.append(alpha.ravel().copy())
            R.append(r)
            X, R = X[-(opts.history + 1) :], R[-(opts.history + 1) :]
            if len(X) > 1 and opts.history > 0:
                alpha = _anderson(X, R).reshape(N, N)
            else:
                alpha = alpha + mixing * r.reshape(N, N)
                step = "damped"
            alpha = 0.5 * (alpha + alpha.T)
        F_hist.append(F)
        res_norm = float(np.linalg.norm(r))
        trace.append({"iteration": it, "F": F, "dGamma": dG, "residual": res_norm, "mixing": mixing, "step": step})
        tail = F_hist[-opts.tail :]
        monotone = len(tail) == opts.tail and all(b <= a + slack for a, b in zip(tail, tail[1:]))
        if dG < opts.tol and res_norm < opts.tol and monotone:
            converged = True
            break
        if mixing < 1e-6:
            break
    if not converged:
        raise ConvergenceError(
            f"self-consistent iteration did not converge in {len(trace)} steps "
            f"(last residual {trace[-1]['residual']:.3e})",
            best=G,
            trace=trace,
        )
    G0 = normal_state(model)
    F0 = bcs_free_energy(G0, model)
    F = trace[-1]["F"]
    is_normal = bool(np.linalg.norm(G.alpha) <= 10 * opts.tol)
    if F0 < F:
        G, F, is_normal = G0, F0, True
    return SCFResult(G, F, F0, converged, len(trace), is_normal, trace)
