"""One-dimensional lattice realization of the rescaled BCS functional."""

from .model import LatticeModel
from .scf import SCFOptions, SCFResult, self_consistent_minimize
from .states import (
    BdGState,
    PairingOperatorH,
    assemble_hdelta,
    bcs_free_energy,
    build_alpha_gl,
    energy_identity_check,
    entropy_bound_check,
    gibbs_state,
    normal_free_energy_closed_form,
    normal_state,
    relative_entropy,
)
from .sweep import project_on_pair_channel, semiclassical_sweep

__all__ = [
    "BdGState",
    "LatticeModel",
    "PairingOperatorH",
    "SCFOptions",
    "SCFResult",
    "assemble_hdelta",
    "bcs_free_energy",
    "build_alpha_gl",
    "energy_identity_check",
    "entropy_bound_check",
    "gibbs_state",
    "normal_free_energy_closed_form",
    "normal_state",
    "project_on_pair_channel",
    "relative_entropy",
    "self_consistent_minimize",
    "semiclassical_sweep",
]
