import numpy as np
import pytest
from scipy.integrate import trapezoid

from bcsgl.errors import InvalidArgument, NoPairing
from bcsgl.pairing import (
    InteractionPotential,
    RadialGrid,
    SWaveKernel,
    find_tc,
    validate_sector,
)

# T_c from an independent Nystrom solve built on the closed-form Gaussian
# kernels (uniform Gauss-Legendre panels, Brent root of the lowest eigenvalue)
TC_ORACLE_1D = 1.1134543711029266
TC_ORACLE_3D = 3.3753251667450552


def test_tc_1d_matches_independent_oracle(pair_1d):
    assert pair_1d.T_c == pytest.approx(TC_ORACLE_1D, rel=1e-9)


def test_tc_3d_matches_independent_oracle(pair_3d):
    assert pair_3d.T_c == pytest.approx(TC_ORACLE_3D, rel=1e-9)


@pytest.mark.parametrize("dim", [1, 3])
def test_gaussian_kernel_matches_closed_form(dim):
    a, b = -2.0, 0.8
    k = SWaveKernel(InteractionPotential.gaussian(a, b, dimension=dim), 12.0)
    q = np.array([0.3, 1.0, 2.5, 7.0])
    Q, P = np.meshgrid(q, q, indexing="ij")
    if dim == 1:
        ref = a * b * np.sqrt(np.pi) / (2 * np.pi) * (np.exp(-b * b * (Q - P) ** 2 / 4) + np.exp(-b * b * (Q + P) ** 2 / 4))
        ref /= 2  # kernel acts on even functions with the doubled half-line measure
    else:
        ref = (
            (2 / np.pi) * a * b * np.sqrt(np.pi) / 4 / (Q * P)
            * (np.exp(-b * b * (Q - P) ** 2 / 4) - np.exp(-b * b * (Q + P) ** 2 / 4))
        )
        ref /= 4 * np.pi  # kernel acts with the full 4 pi q^2 measure
    assert np.allclose(k(q, q), ref, rtol=1e-10, atol=1e-13)


def test_zero_potential_has_no_pairing():
    with pytest.raises(NoPairing):
        find_tc(InteractionPotential.gaussian(0.0, 1.0, dimension=3), 1.0)


def test_bisection_trace_is_increasing(pair_1d, pair_3d):
    for pair in (pair_1d, pair_3d):
        trace = sorted(pair.trace)
        T = np.array([t for t, _ in trace])
        e = np.array([v for _, v in trace])
        keep = np.concatenate([[True], np.diff(T) > 0])
        assert np.all(np.diff(e[keep]) > 0)


def test_eigenvalue_at_tc_vanishes(pair_1d, pair_3d):
    assert abs(pair_1d.eigenvalue) < 1e-8
    assert abs(pair_3d.eigenvalue) < 1e-8
    assert pair_1d.gap_to_next > 0


def test_refined_grid_keeps_tc(well_1d, pair_1d):
    fine = find_tc(well_1d, 1.0, grid=pair_1d.grid.refined(2))
    assert fine.T_c == pytest.approx(pair_1d.T_c, rel=1e-9)


def test_pair_state_normalized_in_position_space(pair_1d, pair_3d):
    assert pair_1d.norm() == pytest.approx(1.0, rel=1e-12)
    r = np.linspace(0, 40, 40001)
    a = pair_1d.alpha_position(r)
    norm_sq = 2 * trapezoid(a * a, r)
    assert norm_sq == pytest.approx(1.0, rel=1e-6)
    r3 = np.linspace(0, 30, 30001)
    a3 = pair_3d.alpha_position(r3)
    assert 4 * np.pi * trapezoid(a3 * a3 * r3 * r3, r3) == pytest.approx(1.0, rel=1e-6)


def test_nystrom_interpolation_reproduces_nodes(pair_1d):
    q = pair_1d.grid.nodes
    assert np.allclose(pair_1d.alpha_momentum(q), pair_1d.alpha0, rtol=1e-8, atol=1e-12)


def test_s_wave_is_lowest(well_1d, pair_1d, well_3d, pair_3d):
    s1 = validate_sector(well_1d, 1.0, pair_1d.grid, pair_1d.T_c)
    s3 = validate_sector(well_3d, 1.0, pair_3d.grid, pair_3d.T_c)
    assert s1["s_wave_minimal"] and s3["s_wave_minimal"]
    assert s3["ordering"][0] == "0"


def test_tabulated_matches_gaussian(tmp_path):
    r = np.linspace(0, 7, 1401)
    v = -3.0 * np.exp(-r * r)
    v[-1] = 0.0
    f = tmp_path / "well.txt"
    np.savetxt(f, np.column_stack([r, v]), header="r V")
    tab = InteractionPotential.from_file(f, dimension=1)
    assert find_tc(tab, 1.0).T_c == pytest.approx(TC_ORACLE_1D, rel=1e-6)


def test_tabulated_without_decay_rejected():
    with pytest.raises(InvalidArgument, match="decay"):
        InteractionPotential.tabulated([0, 1, 2, 3], [-1, -1, -1, -0.5])


def test_invalid_inputs():
    with pytest.raises(InvalidArgument):
        InteractionPotential.gaussian(-1, 1, dimension=2)
    with pytest.raises(InvalidArgument):
        find_tc(InteractionPotential.gaussian(-1, 1), -1.0)
    with pytest.raises(InvalidArgument):
        RadialGrid.build(1.0, 1.5)
