import numpy as np
import pytest

from sgswe.pce import build_basis, gauss_rule, xi_expansion
from sgswe.solver import Grid, SolverConfig, StateField, run, step
from sgswe.uq import (
    collocation_solve,
    input_probability,
    moments,
    negative_region,
    quantile_band,
    sample_input,
)


def test_moments_frozen():
    mean, var = moments(np.array([2.0, 3.0, 4.0]))
    assert mean == 2.0
    assert var == 25.0
    mean2, var2 = moments(np.array([[1.0, 0.0], [0.5, 2.0]]))
    assert np.allclose(mean2, [1.0, 0.5])
    assert np.allclose(var2, [0.0, 4.0])


def test_sample_input_uniform_is_uniform():
    basis = build_basis(0.0, 0.0, 1)
    xi = sample_input(basis, 50000, seed=1)
    assert xi.min() > -1.0 and xi.max() < 1.0
    assert abs(xi.mean()) < 0.01
    assert abs(xi.var() - 1.0 / 3.0) < 0.01


def test_input_probability():
    uni = build_basis(0.0, 0.0, 1)
    assert input_probability(uni, -1.0, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert input_probability(uni, -1.0, 0.9) == pytest.approx(0.95, abs=1e-12)
    assert input_probability(uni, 0.5, 0.25) == 0.0
    skew = build_basis(3.0, 1.0, 1)
    # Beta(2, 4) tail mass above y = 0.95, by hand from the binomial
    # identity: 0.05^5 + 5 * 0.95 * 0.05^4 = 3.0e-5 exactly
    assert input_probability(skew, 0.9, 1.0) == pytest.approx(3.0e-5, rel=1e-9)


def test_quantile_band_linear_uniform():
    basis = build_basis(0.0, 0.0, 2)
    c1 = 0.5 / np.sqrt(3.0)
    coeffs = np.array([[1.0, c1]])
    band = quantile_band(basis, coeffs, level=0.99, n_samples=40000, seed=7)
    assert band.lower[0] == pytest.approx(1.0 + 0.5 * (-0.99), abs=5e-3)
    assert band.upper[0] == pytest.approx(1.0 + 0.5 * 0.99, abs=5e-3)
    wide = quantile_band(basis, coeffs, level=0.999, n_samples=40000, seed=7)
    assert wide.lower[0] <= band.lower[0] and wide.upper[0] >= band.upper[0]
    with pytest.raises(ValueError):
        quantile_band(basis, coeffs, level=1.5)


def test_quantile_band_deterministic_collapses():
    basis = build_basis(3.0, 1.0, 4)
    coeffs = np.zeros((10, 4))
    coeffs[:, 0] = np.linspace(1.0, 2.0, 10)
    band = quantile_band(basis, coeffs, n_samples=500, seed=0)
    assert np.array_equal(band.lower, coeffs[:, 0])
    assert np.array_equal(band.upper, coeffs[:, 0])


def test_quantile_band_seeded_and_chunked():
    basis = build_basis(0.0, 0.0, 3)
    rng = np.random.default_rng(5)
    coeffs = np.concatenate(
        [rng.uniform(1.0, 2.0, size=(300, 1)), rng.normal(scale=0.1, size=(300, 2))],
        axis=1,
    )
    a = quantile_band(basis, coeffs, n_samples=2000, seed=3, chunk=7)
    b = quantile_band(basis, coeffs, n_samples=2000, seed=3, chunk=300)
    assert np.array_equal(a.lower, b.lower)
    assert np.array_equal(a.upper, b.upper)
    c = quantile_band(basis, coeffs, n_samples=2000, seed=4)
    assert not np.array_equal(a.lower, c.lower)


def test_negative_region_uniform_linear():
    basis = build_basis(0.0, 0.0, 2)
    # field value is xi - 0.9
    coeffs = np.array([[-0.9, 1.0 / np.sqrt(3.0)]])
    rep = negative_region(basis, coeffs, rule=gauss_rule(basis, 5))
    assert rep.max_node == pytest.approx(0.906179845938664, abs=1e-12)
    assert len(rep.intervals) == 1
    a, b = rep.intervals[0]
    assert a == -1.0
    assert b == pytest.approx(0.9, abs=1e-6)
    assert rep.probability == pytest.approx(0.95, abs=1e-6)
    assert rep.min_value == pytest.approx(-1.9, abs=1e-12)
    assert rep.argmin_xi == -1.0


def test_negative_region_right_tail_skewed():
    basis = build_basis(3.0, 1.0, 2)
    # field value is 0.9 - xi, negative only in the thin right tail
    root = xi_expansion(basis)
    coeffs = np.array([0.9 - root[0], -root[1]])[None, :]
    rep = negative_region(basis, coeffs)
    assert len(rep.intervals) == 1
    a, b = rep.intervals[0]
    assert a == pytest.approx(0.9, abs=1e-6)
    assert b == 1.0
    assert rep.probability == pytest.approx(3.0e-5, rel=1e-4)


def test_negative_region_empty():
    basis = build_basis(0.0, 0.0, 3)
    rep = negative_region(basis, np.array([[2.0, 0.1, 0.05]]))
    assert rep.intervals == ()
    assert rep.probability == 0.0
    assert rep.min_value > 0.0


def test_negative_region_two_cells_takes_min():
    basis = build_basis(0.0, 0.0, 2)
    s3 = np.sqrt(3.0)
    coeffs = np.array([[0.1, 1.0 / s3], [0.1, -1.0 / s3]])  # 0.1 + xi, 0.1 - xi
    rep = negative_region(basis, coeffs)
    assert len(rep.intervals) == 2
    assert rep.intervals[0][0] == -1.0
    assert rep.intervals[0][1] == pytest.approx(-0.1, abs=1e-6)
    assert rep.intervals[1][0] == pytest.approx(0.1, abs=1e-6)
    assert rep.intervals[1][1] == 1.0
    assert rep.probability == pytest.approx(0.9, abs=1e-5)


def dam_break_field(grid, k, height_shift=0.0):
    h = np.zeros((grid.n_cells, k))
    h[:, 0] = np.where(grid.centers < 0.0, 1.0 + height_shift, 0.5 + height_shift)
    return StateField(
        grid=grid,
        h_bar=h,
        q_bar=np.zeros_like(h),
        bottom_iface=np.zeros((grid.n_cells + 1, k)),
    )


def test_collocation_projection_without_dynamics():
    basis = build_basis(0.0, 0.0, 4)
    grid = Grid(20, -1.0, 1.0)
    cfg = SolverConfig(gravity=1.0)
    result = collocation_solve(
        basis, 6, lambda xi: dam_break_field(grid, 1, 0.1 * xi), cfg, t_final=0.0
    )
    # affine data projects onto the first two coefficients exactly
    expect0 = dam_break_field(grid, 1).h_bar[:, 0]
    root = xi_expansion(basis)
    assert np.max(np.abs(result.h_hat[:, 0] - expect0 - 0.1 * root[0])) < 1e-13
    assert np.max(np.abs(result.h_hat[:, 1] - 0.1 * root[1])) < 1e-13
    assert np.max(np.abs(result.h_hat[:, 2:])) < 1e-13
    assert np.max(np.abs(result.q_hat)) < 1e-15


def test_collocation_deterministic_matches_direct_run():
    basis = build_basis(3.0, 1.0, 3)
    grid = Grid(30, -1.0, 1.0)
    cfg = SolverConfig(gravity=1.0, theta=1.3)
    result = collocation_solve(
        basis, 4, lambda xi: dam_break_field(grid, 1), cfg, t_final=0.05
    )
    det_basis = build_basis(3.0, 1.0, 1)
    det_rule = gauss_rule(det_basis, 1)
    direct, _ = run(dam_break_field(grid, 1), det_basis, det_rule, cfg, 0.05)
    assert np.max(np.abs(result.h_hat[:, 0] - direct.h_bar[:, 0])) < 1e-12
    assert np.max(np.abs(result.h_hat[:, 1:])) < 1e-12
    assert result.t == pytest.approx(0.05, abs=1e-12)


def test_collocation_rejects_wide_fields():
    basis = build_basis(0.0, 0.0, 2)
    grid = Grid(10, -1.0, 1.0)
    with pytest.raises(ValueError):
        collocation_solve(
            basis, 3, lambda xi: dam_break_field(grid, 2), SolverConfig(), 0.01
        )
