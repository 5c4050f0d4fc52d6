"""Acceptance criteria 1-10; each test prints one ``CRITERION n: PASS/FAIL`` line."""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from bcsgl.bdglattice.model import LatticeModel
from bcsgl.bdglattice.scf import SCFOptions, self_consistent_minimize
from bcsgl.bdglattice.states import (
    BdGState,
    PairingOperatorH,
    assemble_hdelta,
    build_alpha_gl,
    energy_identity_check,
    entropy_bound_check,
    gibbs_state,
    normal_state,
    pair_profile,
)
from bcsgl.corefn import SERIES_THRESHOLD, g1_eval, g1_over_z, g2_eval, kt_eval
from bcsgl.errors import NoPairing
from bcsgl.fields import ExternalFields
from bcsgl.glcoeff import compute_coefficients, dense_trapezoid_coefficients, form_factor, gl_coefficients
from bcsgl.glfield import (
    GLProblem,
    MinimizeOptions,
    OrderParameterField,
    Torus,
    critical_d,
    critical_d_bisection,
    field_free_minimum,
    gl_minimize,
)
from bcsgl.pairing import InteractionPotential, find_tc

FIELDS = {"A": [[{"k": [0], "amp": [0.3, 0]}, {"k": [1], "amp": [0, 0.2]}]], "W": [{"k": [1], "amp": [2.5, 0]}]}
FIELDS_2D = {
    "A": [[{"k": [0, 1], "amp": [0.2, 0.1]}], [{"k": [1, 0], "amp": [-0.15, 0]}]],
    "W": [{"k": [1, 1], "amp": [0.8, 0]}, {"k": [0, 0], "amp": [0.3, 0]}],
}


def random_h(N, rng, scale=1.0):
    X = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    Y = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return PairingOperatorH(scale * (X + X.conj().T) / 2, scale * (Y + Y.T) / 2)


def random_psi(rng, M=3):
    g = Torus(1, 1.0, M)
    return OrderParameterField(g, 0.6 * (rng.standard_normal(2 * M + 1) + 1j * rng.standard_normal(2 * M + 1)))


def test_criterion_1_special_functions(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    eta = rng.uniform(-50, 50, 10_000) * rng.choice([1e-6, 1e-2, 1.0, 10.0], 10_000)
    T = 10.0 ** rng.uniform(-3, 3, 10_000)
    ok_zero = all(kt_eval(0.0, t) == 2 * t for t in (1e-3, 0.37, 1.0, 42.0))
    ok_bound = bool(np.all(kt_eval(eta, T) >= 2 * T * (1 - 1e-15)))
    z = np.concatenate([rng.uniform(-700, 700, 5000), rng.uniform(-1e-3, 1e-3, 5000)])
    ok_sym = bool(np.all(g1_eval(-z) == -g1_eval(z)) and np.all(g2_eval(-z) == g2_eval(z)) and np.all(g1_over_z(z) > 0))
    worst = 0.0
    for edge in (SERIES_THRESHOLD, 1.0):
        zz = np.array([edge * (1 - 1e-12), edge * (1 + 1e-12)])
        for f in (g1_eval, g2_eval, g1_over_z):
            a, b = f(zz)
            worst = max(worst, abs(a - b) / abs(a))
    x = 1e-4 * 2 * 0.7
    lo, hi = kt_eval(np.array([x * (1 - 1e-12), x * (1 + 1e-12)]), 0.7)
    worst = max(worst, abs(hi - lo) / lo)
    dt = time.perf_counter() - t0
    ok = ok_zero and ok_bound and ok_sym and worst < 1e-10 and dt < 1.0
    criterion(1, ok, f"kt(0,T)=2T {ok_zero}, kt>=2T on 1e4 {ok_bound}, symmetries {ok_sym}, "
                     f"crossover mismatch {worst:.1e}, {dt:.2f} s")


def test_criterion_2_tc_solver(criterion, well_1d):
    t0 = time.perf_counter()
    try:
        find_tc(InteractionPotential.gaussian(0.0, 1.0, dimension=1), 1.0)
        no_pair = False
    except NoPairing:
        no_pair = True
    pair = find_tc(well_1d, 1.0)
    trace = sorted(pair.trace)
    Ts = np.array([t for t, _ in trace])
    es = np.array([e for _, e in trace])
    keep = np.concatenate([[True], np.diff(Ts) > 0])
    increasing = bool(np.all(np.diff(es[keep]) > 0))
    fine = find_tc(well_1d, 1.0, grid=pair.grid.refined(2))
    rel = abs(fine.T_c - pair.T_c) / pair.T_c
    dt = time.perf_counter() - t0
    ok = no_pair and increasing and abs(pair.eigenvalue) < 1e-8 and rel < 5e-4 and dt < 30
    criterion(2, ok, f"NoPairing at V=0 {no_pair}, trace increasing {increasing}, |e(T_c)| {abs(pair.eigenvalue):.1e}, "
                     f"T_c {pair.T_c:.10f} refined rel. change {rel:.1e}, {dt:.1f} s")


def test_criterion_3_coefficients(criterion, pair_1d):
    t0 = time.perf_counter()
    base = gl_coefficients(pair_1d, 1.0)
    positive = base.lambda0 > 0 and base.lambda3 > 0
    per_D = [gl_coefficients(pair_1d, D).lambda2 / D for D in (-1.0, 0.5, 2.0)]
    d_err = max(abs(v / base.lambda2_per_D - 1) for v in per_D)
    s = 1.7
    sc = gl_coefficients(pair_1d.scaled(s), 1.0)
    scale_err = max(
        abs(sc.lambda0 / (s * s * base.lambda0) - 1),
        abs(sc.lambda3 / (s * s * base.lambda3) - 1),
        abs(sc.lambda1 / base.lambda1 - 1),
        abs(sc.lambda2 / base.lambda2 - 1),
    )
    ff = form_factor(pair_1d)
    a = compute_coefficients(ff, pair_1d.T_c, pair_1d.mu, 1.0)
    b = dense_trapezoid_coefficients(ff, pair_1d.T_c, pair_1d.mu, 1.0)
    oracle_err = max(abs(getattr(a, k) / getattr(b, k) - 1) for k in ("lambda0", "lambda1", "lambda2", "lambda3"))
    dt = time.perf_counter() - t0
    ok = positive and d_err < 1e-10 and scale_err < 1e-10 and oracle_err < 1e-6 and dt < 10
    criterion(3, ok, f"lambda0 {base.lambda0:.6g} lambda3 {base.lambda3:.6g} positive {positive}, "
                     f"lambda2/D spread {d_err:.1e}, scaling law {scale_err:.1e}, dense oracle {oracle_err:.1e}, {dt:.1f} s")


def test_criterion_4_gl_minimizer(criterion, coeffs_1d):
    t0 = time.perf_counter()
    c = coeffs_1d
    e_err, mod_err = 0.0, 0.0
    for d in (1, 2):
        g = Torus(d, 1.0, 32)
        psi, e, _ = gl_minimize(ExternalFields.none(d), c, g)
        rho, e_ref = field_free_minimum(c, g)
        e_err = max(e_err, abs(e / e_ref - 1))
        mod_err = max(mod_err, float(np.max(np.abs(np.abs(psi.values()) - np.sqrt(rho)))))
    neg = c.with_D(-0.5)
    psi0, e0, _ = gl_minimize(ExternalFields.none(1), neg, Torus(1, 1.0, 32))
    zero_ok = e0 == 0.0 and not np.any(psi0.coeffs)
    rng = np.random.default_rng(4)
    fd_err = 0.0
    for d, spec in ((1, FIELDS), (2, FIELDS_2D)):
        g = Torus(d, 1.0, 4)
        prob = GLProblem(ExternalFields.from_json(spec, d), c, g)
        for _ in range(10):
            v = 0.5 * rng.standard_normal(2 * (9**d))
            _, grad = prob.real_objective(v)
            u = rng.standard_normal(v.size)
            eps = 1e-5
            fd = (prob.real_objective(v + eps * u)[0] - prob.real_objective(v - eps * u)[0]) / (2 * eps)
            fd_err = max(fd_err, abs(grad @ u - fd) / abs(fd))
    dt = time.perf_counter() - t0
    ok = e_err < 1e-8 and mod_err < 1e-6 and zero_ok and fd_err < 1e-6 and dt < 60
    criterion(4, ok, f"field-free energy rel. error {e_err:.1e}, |psi| spread {mod_err:.1e}, "
                     f"lambda2<=0 gives zero {zero_ok}, gradient vs FD (20 points) {fd_err:.1e}, {dt:.1f} s")


def test_criterion_5_critical_d(criterion, coeffs_1d):
    t0 = time.perf_counter()
    g = Torus(1, 1.0, 8)
    fields = ExternalFields.from_json(FIELDS, 1)
    eig = critical_d(fields, coeffs_1d, g)
    bis = critical_d_bisection(fields, coeffs_1d, g, MinimizeOptions(restarts=2), rel_tol=1e-6)
    rel = abs(bis - eig) / abs(eig)
    zero = critical_d(ExternalFields.none(1), coeffs_1d, g)
    dt = time.perf_counter() - t0
    ok = rel < 1e-4 and zero == 0.0 and dt < 60
    criterion(5, ok, f"D* eigenvalue {eig:.8f} vs bisection {bis:.8f} (rel. {rel:.1e}), zero fields D* = {zero!r}, {dt:.1f} s")


@pytest.fixture(scope="module")
def lattice64(well_1d, pair_1d):
    return LatticeModel.from_D(0.25, 1.0, pair_1d.T_c, 1.0, well_1d, ExternalFields.from_json(FIELDS, 1), N=64)


def test_criterion_6_exact_identity(criterion, pair_1d, lattice64):
    t0 = time.perf_counter()
    m = lattice64
    rng = np.random.default_rng(6)
    worst, kinds = 0.0, {"psi0=0": 0, "Gamma=Gamma_Delta": 0, "generic": 0}
    for i in range(50):
        psi = None if i % 10 == 0 else random_psi(rng)
        a = build_alpha_gl(psi, pair_1d, m)
        H = assemble_hdelta(None, pair_1d, m, alpha_gl=a)
        if i % 5 == 1:
            G = gibbs_state(H, m.T)
            kinds["Gamma=Gamma_Delta"] += 1
        else:
            P = random_h(m.N, rng, scale=rng.uniform(0.01, 0.5))
            G = BdGState.gibbs(PairingOperatorH(H.one_body + P.one_body, H.delta + P.delta), m.T * rng.uniform(0.5, 2))
            kinds["psi0=0" if psi is None else "generic"] += 1
        _, _, res = energy_identity_check(G, psi, pair_1d, m, alpha_gl=a)
        worst = max(worst, res)
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and dt < 120
    criterion(6, ok, f"worst relative residual {worst:.1e} over 50 instances {kinds}, {dt:.1f} s")


def test_criterion_7_entropy_inequality(criterion, pair_1d, lattice64):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    fails, worst = 0, np.inf
    for _ in range(1000):
        N = int(rng.integers(1, 9))
        T = float(10 ** rng.uniform(-1, 0.5))
        H = random_h(N, rng, scale=10 ** rng.uniform(-1, 1))
        G = BdGState.gibbs(random_h(N, rng, scale=10 ** rng.uniform(-1, 1)), float(10 ** rng.uniform(-1, 0.5)))
        lhs, rhs, ok = entropy_bound_check(G, H, T)
        fails += not ok
        worst = min(worst, (lhs - rhs) / max(abs(lhs), 1e-300))
    m = lattice64
    for _ in range(20):
        H = assemble_hdelta(random_psi(rng), pair_1d, m)
        P = random_h(m.N, rng, scale=rng.uniform(0.01, 0.5))
        G = BdGState.gibbs(PairingOperatorH(H.one_body + P.one_body, H.delta + P.delta), m.T)
        lhs, rhs, ok = entropy_bound_check(G, H, m.T)
        fails += not ok
        worst = min(worst, (lhs - rhs) / max(abs(lhs), 1e-300))
    dt = time.perf_counter() - t0
    ok = fails == 0 and dt < 120
    criterion(7, ok, f"{fails} violations in 1000 trials at N<=8 + 20 at N=64, "
                     f"smallest (lhs-rhs)/|lhs| {worst:.1e}, {dt:.1f} s")


@pytest.mark.slow
def test_criterion_8_phase_diagnosis(criterion, well_1d, pair_1d):
    t0 = time.perf_counter()
    opts = SCFOptions(tol=1e-10)
    out = {}
    for factor in (1.2, 0.8):
        m = LatticeModel(0.125, factor * pair_1d.T_c, 1.0, well_1d, N=512)
        res = self_consistent_minimize(m, 0.3 * pair_profile(pair_1d, m), opts)
        out[factor] = res
    dt = time.perf_counter() - t0
    hot, cold = out[1.2], out[0.8]
    ok = (
        hot.converged and hot.is_normal and cold.converged
        and cold.alpha_norm > 10 * opts.tol and not cold.is_normal and dt < 300
    )
    criterion(8, ok, f"N=512 h=1/8: 1.2 T_c ||alpha|| {hot.alpha_norm:.1e} ({hot.iterations} it), "
                     f"0.8 T_c ||alpha|| {cold.alpha_norm:.4f} ({cold.iterations} it), {dt:.0f} s")


def _run_bundled(out_dir):
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "bcsgl.cli", "run", "--out", str(out_dir)],
        capture_output=True, text=True, timeout=1800,
    )
    return proc, time.perf_counter() - t0


@pytest.fixture(scope="module")
def bundled_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run_a")
    proc, dt = _run_bundled(out)
    return out, proc, dt


@pytest.mark.slow
def test_criterion_9_semiclassical_sweep(criterion, bundled_run):
    out, proc, dt = bundled_run
    assert proc.returncode == 0, proc.stderr
    rec = json.loads((out / "record.json").read_text())
    sweep = rec["stages"]["verify"]["result"]["sweep"]
    rows = sorted(sweep["records"], key=lambda r: -r["h"])
    assert [r["h"] for r in rows] == [0.25, 0.125, 0.0625]
    r = [row["ratio"] for row in rows]
    dist = [row["alpha_distance_gl"] for row in rows]
    proj = [row["alpha_distance"] for row in rows]
    trend = abs(r[-1] - 1) < abs(r[0] - 1)
    close = abs(r[-1] - 1) < 0.35
    decreasing = all(b < a for a, b in zip(dist, dist[1:])) and all(b < a for a, b in zip(proj, proj[1:]))
    ok = rec["status"] == "ok" and trend and close and decreasing and dt < 1800
    criterion(9, ok, "r(h) = " + ", ".join(f"{v:.5f}" for v in r)
              + "; ||alpha-alpha_GL||^2/||alpha_GL||^2 = " + ", ".join(f"{v:.2e}" for v in dist)
              + " (projection " + ", ".join(f"{v:.2e}" for v in proj) + f"); full run {dt:.0f} s")


@pytest.mark.slow
def test_criterion_10_determinism(criterion, bundled_run, tmp_path):
    out_a, proc_a, _ = bundled_run
    assert proc_a.returncode == 0, proc_a.stderr
    proc_b, dt = _run_bundled(tmp_path)
    assert proc_b.returncode == 0, proc_b.stderr
    a = (out_a / "record.json").read_bytes()
    b = (tmp_path / "record.json").read_bytes()
    csv_same = all((out_a / f).read_bytes() == (tmp_path / f).read_bytes() for f in ("coefficients.csv", "sweep.csv"))
    ok = a == b and csv_same
    criterion(10, ok, f"record.json byte-identical {a == b} ({len(a)} bytes), CSV identical {csv_same}, second run {dt:.0f} s")
