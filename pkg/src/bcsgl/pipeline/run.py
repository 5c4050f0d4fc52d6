"""Stage orchestration: tc -> coeffs -> gl-min -> verify.

Each stage writes a ``{"status", "module", "result"}`` entry into the run
record. A failing stage stops the chain; everything completed before it is
kept and the error is recorded with its stage tag and exit code.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from ..bdglattice import (
    BdGState,
    LatticeModel,
    PairingOperatorH,
    SCFOptions,
    assemble_hdelta,
    bcs_free_energy,
    build_alpha_gl,
    energy_identity_check,
    entropy_bound_check,
    gibbs_state,
    normal_free_energy_closed_form,
    normal_state,
    semiclassical_sweep,
)
from ..errors import BcsglError, InvalidArgument
from ..fields import ExternalFields
from ..glcoeff import gl_coefficients
from ..glfield import (
    MinimizeOptions,
    Torus,
    critical_d,
    critical_d_bisection,
    field_free_minimum,
    gl_minimize,
)
from ..pairing import InteractionPotential, RadialGrid, find_tc, validate_sector
from .config import RunConfig

log = logging.getLogger(__name__)

STAGES = ("tc", "coeffs", "gl-min", "verify")
COMMAND_STAGES = {
    "tc": ("tc",),
    "coeffs": ("tc", "coeffs"),
    "gl-min": ("tc", "coeffs", "gl-min"),
    "verify-1d": STAGES,
    "sweep": STAGES,
    "run": STAGES,
}
# which parts of the verify stage each command runs
VERIFY_PARTS = {"verify-1d": ("checks",), "sweep": ("sweep",), "run": ("checks", "sweep")}
MODULES = {
    "tc": "bcsgl.pairing",
    "coeffs": "bcsgl.glcoeff",
    "gl-min": "bcsgl.glfield",
    "verify": "bcsgl.bdglattice",
}
# Galerkin matrices larger than this are not formed for the eigenvalue route to D*
MAX_THRESHOLD_MODES = 3000


def build_potential(cfg: RunConfig) -> InteractionPotential:
    p = cfg.potential
    if p.kind == "gaussian":
        return InteractionPotential.gaussian(p.depth, p.width, dimension=cfg.dimension)
    if p.file is not None:
        return InteractionPotential.from_file(p.file, dimension=cfg.dimension)
    return InteractionPotential.tabulated(p.r, p.values, dimension=cfg.dimension)


def build_fields(cfg: RunConfig) -> ExternalFields:
    return ExternalFields.from_json(cfg.fields_json(), cfg.dimension, cfg.gl.L)


@dataclass
class RunContext:
    cfg: RunConfig
    potential: InteractionPotential | None = None
    pair: object = None
    coeffs: object = None
    fields: ExternalFields | None = None
    psi: object = None
    gl_energy: float | None = None
    notes: list = field(default_factory=list)


def _stage_tc(ctx: RunContext):
    cfg = ctx.cfg
    ctx.potential = build_potential(cfg)
    grid = None
    if cfg.grid.q_max is not None:
        grid = RadialGrid.build(
            cfg.mu, cfg.grid.q_max, dimension=cfg.dimension, nodes_per_panel=cfg.grid.nodes_per_panel,
            smoothness=1.0 / ctx.potential.length_scale,
        )
    pair = find_tc(ctx.potential, cfg.mu, grid=grid, tol=cfg.tolerances.tc, nodes_per_panel=cfg.grid.nodes_per_panel)
    ctx.pair = pair
    sectors = validate_sector(ctx.potential, cfg.mu, pair.grid, pair.T_c)
    if not sectors["s_wave_minimal"]:
        ctx.notes.append("the lowest pairing eigenvalue is not in the s-wave sector")
    trace = sorted(pair.trace)
    return {
        **pair.summary(),
        "sectors": sectors,
        "bisection_trace": [[float(T), float(e)] for T, e in trace],
        "pair_state": {
            "q": pair.grid.nodes.tolist(),
            "weights": pair.grid.weights.tolist(),
            "alpha0": pair.alpha0.tolist(),
            "normalization": "unit L2 norm in position space; unitary Fourier convention",
        },
    }


def _stage_coeffs(ctx: RunContext):
    cfg = ctx.cfg
    ctx.coeffs = gl_coefficients(ctx.pair, cfg.D, rel_tol=cfg.tolerances.coefficients)
    return ctx.coeffs.report()


def _stage_gl(ctx: RunContext):
    cfg = ctx.cfg
    ctx.fields = build_fields(cfg)
    geometry = Torus(cfg.dimension, cfg.gl.L, cfg.gl.modes)
    opts = MinimizeOptions(restarts=cfg.gl.restarts, gtol=cfg.tolerances.gl_gradient, seed=cfg.seed)
    psi, energy, diag = gl_minimize(ctx.fields, ctx.coeffs, geometry, opts)
    ctx.psi, ctx.gl_energy = psi, energy
    n = 4 * geometry.M + 2 if cfg.dimension == 1 else 2 * geometry.M + 2
    mod = np.abs(psi.values(n))
    cuts = {}
    for axis in range(cfg.dimension):
        x, cut = psi.modulus_cut(n, axis)
        cuts[f"axis{axis}"] = {"x": x.tolist(), "abs_psi": cut.tolist()}
    result = {
        "energy": energy,
        "lambda0_times_energy": ctx.coeffs.lambda0 * energy,
        "geometry": {"dimension": cfg.dimension, "L": cfg.gl.L, "modes_per_axis": 2 * geometry.M + 1},
        "abs_psi": {"points_per_axis": n, "max": float(mod.max()), "min": float(mod.min()),
                    "mean_sq": float(np.mean(mod**2))},
        "cuts": cuts,
        "diagnostics": {k: v for k, v in diag.items() if k != "energy_trace"},
        "field_free_reference": dict(zip(("abs_psi_sq", "energy"), field_free_minimum(ctx.coeffs, geometry))),
    }
    if ctx.coeffs.lambda2_per_D > 0:
        if (2 * geometry.M + 1) ** cfg.dimension <= MAX_THRESHOLD_MODES:
            result["critical_D"] = critical_d(ctx.fields, ctx.coeffs, geometry)
        else:
            result["critical_D"] = None
            ctx.notes.append("critical D skipped: mode box too large for the dense eigenvalue route")
        if cfg.gl.bisection_check:
            result["critical_D_bisection"] = critical_d_bisection(
                ctx.fields, ctx.coeffs, geometry, MinimizeOptions(restarts=2, seed=cfg.seed)
            )
    return result


def _lattice_checks(ctx: RunContext):
    cfg = ctx.cfg
    h = cfg.sweep.h_list[0]
    N = int(round(cfg.sweep.sites_per_h / h))
    pair = ctx.pair
    model = LatticeModel.from_D(h, cfg.D, pair.T_c, cfg.mu, ctx.potential, ctx.fields, N=N)
    out = {"h": h, "N": N, "T": model.T}
    free = LatticeModel(h, model.T, cfg.mu, ctx.potential, N=N)
    F0 = bcs_free_energy(normal_state(free), free)
    out["free_fermion_abs_error"] = abs(F0 - normal_free_energy_closed_form(free))

    alpha_gl = build_alpha_gl(ctx.psi, pair, model)
    H = assemble_hdelta(None, pair, model, alpha_gl=alpha_gl)
    G_delta = gibbs_state(H, model.T)
    out["block_error"] = G_delta.block_error()
    _, _, res_delta = energy_identity_check(G_delta, None, pair, model, alpha_gl=alpha_gl)
    # a nearby admissible state: Gibbs state of a randomly perturbed BdG operator
    rng = np.random.default_rng(cfg.seed)
    X = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    Y = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    Hp = PairingOperatorH(model.one_body + 0.05 * (X + X.conj().T), H.delta + 0.05 * (Y + Y.T))
    G_rand = BdGState.gibbs(Hp, model.T)
    _, _, res_rand = energy_identity_check(G_rand, None, pair, model, alpha_gl=alpha_gl)
    lhs, rhs, ok = entropy_bound_check(G_rand, H, model.T)
    out.update(
        identity_residual_gibbs=res_delta,
        identity_residual_perturbed=res_rand,
        entropy_bound={"lhs": lhs, "rhs": rhs, "pass": ok},
    )
    out["pass"] = bool(
        out["free_fermion_abs_error"] < 1e-10 * max(1.0, abs(F0))
        and out["block_error"] < 1e-10
        and res_delta < 1e-9
        and res_rand < 1e-9
        and ok
    )
    return out


def _stage_verify(ctx: RunContext, parts):
    cfg = ctx.cfg
    if cfg.dimension != 1:
        return {"skipped": "lattice verification is one-dimensional"}
    result = {}
    if "checks" in parts:
        result["checks"] = _lattice_checks(ctx)
    if "sweep" in parts:
        rep = semiclassical_sweep(
            cfg.sweep.h_list,
            ctx.pair,
            ctx.coeffs,
            cfg.D,
            ctx.potential,
            ctx.fields,
            gl_modes=cfg.gl.modes,
            gl_opts=MinimizeOptions(restarts=cfg.gl.restarts, gtol=cfg.tolerances.gl_gradient, seed=cfg.seed),
            scf_opts=SCFOptions(tol=cfg.tolerances.scf),
            sites_per_h=cfg.sweep.sites_per_h,
            progress=lambda r: log.info("sweep h=%g: %s", r.h, r.status),
        )
        result["sweep"] = rep
    return result


def run_pipeline(cfg: RunConfig, command="run", only=None):
    """Execute the stages of ``command`` and return the run record (a plain dict).

    With ``only``, upstream stages are still computed (in memory) but only the
    named stage enters the record.
    """
    if command not in COMMAND_STAGES:
        raise InvalidArgument(f"unknown command {command!r}")
    stages = COMMAND_STAGES[command]
    if only is not None:
        if only not in STAGES:
            raise InvalidArgument(f"unknown stage {only!r}; choose from {', '.join(STAGES)}")
        stages = STAGES[: STAGES.index(only) + 1]
    recorded = stages if only is None else (only,)
    parts = VERIFY_PARTS.get(command, ("checks", "sweep"))

    ctx = RunContext(cfg)
    record = {
        "artifact": "bcsgl",
        "version": __version__,
        "command": command,
        "only": only,
        "config_hash": cfg.config_hash(),
        "config": cfg.semantic_dict(),
        "seed": cfg.seed,
        "stages": {},
        "status": "ok",
        "error": None,
    }
    runners = {
        "tc": _stage_tc,
        "coeffs": _stage_coeffs,
        "gl-min": _stage_gl,
        "verify": lambda c: _stage_verify(c, parts),
    }
    for stage in stages:
        log.info("stage %s", stage)
        try:
            result = runners[stage](ctx)
        except BcsglError as exc:
            record["status"] = "failed"
            record["error"] = {
                "stage": stage,
                "type": type(exc).__name__,
                "message": str(exc),
                "exit_code": exc.exit_code,
            }
            record["stages"][stage] = {"status": "failed", "module": MODULES[stage], "result": None}
            break
        if stage in recorded:
            status = "ok"
            if stage == "verify" and result.get("sweep", {}).get("status") == "partial":
                status = "partial"
            record["stages"][stage] = {"status": status, "module": MODULES[stage], "result": result}
    record["notes"] = list(ctx.notes)
    return record


def exit_code(record):
    if record["error"] is not None:
        return int(record["error"]["exit_code"])
    return 0
