## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

import numpy as np
import pytest

from crosspcf.types import Theta, FirstOrder, PointPattern, ScalarField, SimulationSpec, UNIT_SQUARE
from crosspcf.model import pcf_curves, simulate_mlgcp
from crosspcf.nonparametric import (edge_correction, kernel_intensity, estimate_rho0, diggle_rho0_minus_i,
                                    diggle_intensities, simple_intensities, select_bandwidth, nonparam_pcf,
                                    pcf_ratio_nonparam, silverman_bandwidth, mise, scope_mask)
from crosspcf.errors import ModelValueError

from oracles import uniform_pattern, gradient_field

SHAPE = (64, 64)
R_GRID = np.linspace(0.01, 0.1, 46)


def _first_order() -> FirstOrder:
    """Helper: three types with covariate effects on the x coordinate."""
    return FirstOrder([[0.4, -0.5], [0.1, 0.6], [0.0, 0.0]], (gradient_field(),), baseline=2)


def test_single_point_mass_is_preserved():
    field = kernel_intensity([[0.5, 0.5]], UNIT_SQUARE, 0.1, shape=SHAPE)
    assert field.integral() == pytest.approx(1.0, abs=1e-3)


def test_edge_correction_inflates_corner_points():
    corner, centre = edge_correction([[0.01, 0.01], [0.5, 0.5]], UNIT_SQUARE, 0.1, SHAPE)
    assert 0.2 < corner < 0.5
    assert centre == pytest.approx(1.0, abs=1e-3)

    field = kernel_intensity([[0.01, 0.01]], UNIT_SQUARE, 0.1, shape=SHAPE)
    assert field.integral() == pytest.approx(1.0, abs=1e-3)


def test_kernel_intensity_rejects_bad_bandwidth():
    with pytest.raises(ModelValueError):
        kernel_intensity([[0.5, 0.5]], UNIT_SQUARE, 0.0)


def test_rho0_of_one_type_is_kernel_intensity():
    pattern = uniform_pattern(60, 1, rng_seed=1)
    rho0 = estimate_rho0(pattern, FirstOrder.uniform(1), 0.08, shape=SHAPE)
    direct = kernel_intensity(pattern.xy, UNIT_SQUARE, 0.08, shape=SHAPE)
    assert np.allclose(rho0.values, direct.values)


def test_rho0_scales_with_common_weight_factor():
    pattern = uniform_pattern(90, 3, rng_seed=2)
    first_order = _first_order()
    shifted = FirstOrder(first_order.beta - np.array([[np.log(3.0), 0.0]]), first_order.covariates)

    base = estimate_rho0(pattern, first_order, 0.1, shape=SHAPE)
    scaled = estimate_rho0(pattern, shifted, 0.1, shape=SHAPE)
    assert np.allclose(scaled.values, 3.0 * base.values)


def test_rho0_integrates_to_weighted_count():
    pattern = uniform_pattern(90, 3, rng_seed=2)
    first_order = _first_order()
    weights = np.exp(-first_order.log_f(pattern.xy)[np.arange(pattern.n), pattern.types])
    rho0 = estimate_rho0(pattern, first_order, 0.1, shape=SHAPE)
    assert rho0.integral() == pytest.approx(weights.sum() / 3, rel=1e-9)


def test_leave_one_type_out_background():
    pattern = uniform_pattern(90, 3, rng_seed=3)
    first_order = _first_order()
    left_out = diggle_rho0_minus_i(pattern, first_order, 0.1, 1, shape=SHAPE)
    expected = estimate_rho0(pattern, first_order, 0.1, shape=SHAPE, types=[0, 2])
    assert np.allclose(left_out.values, expected.values)

    with pytest.raises(ModelValueError):
        diggle_rho0_minus_i(pattern, first_order, 0.1, 3)
    with pytest.raises(ModelValueError):
        diggle_rho0_minus_i(uniform_pattern(10, 1), FirstOrder.uniform(1), 0.1, 0)


def test_type_intensities_have_one_field_per_type():
    pattern = uniform_pattern(90, 3, rng_seed=3)
    simple = simple_intensities(pattern, 0.1, shape=SHAPE)
    diggle = diggle_intensities(pattern, _first_order(), 0.1, shape=SHAPE)
    assert len(simple) == len(diggle) == 3
    for i, field in enumerate(simple):
        assert field.integral() == pytest.approx(np.sum(pattern.types == i), rel=1e-9)
    assert all(np.all(field.values > 0) for field in diggle)


def test_bandwidth_is_degenerate_for_one_type():
    pattern = uniform_pattern(80, 1, rng_seed=4)
    chosen = select_bandwidth(pattern, FirstOrder.uniform(1), [0.2, 0.05, 0.1], shape=SHAPE)
    assert chosen.degenerate
    assert chosen.bandwidth == 0.05
    assert chosen.omega == pytest.approx(chosen.w_hat)
    assert np.allclose(np.nan_to_num(chosen.criterion), 0.0)


def test_bandwidth_minimises_the_area_criterion():
    pattern = uniform_pattern(150, 3, rng_seed=5)
    grid = [0.05, 0.1, 0.15, 0.2]
    chosen = select_bandwidth(pattern, _first_order(), grid, shape=SHAPE)
    assert not chosen.degenerate
    assert chosen.bandwidth in grid
    assert chosen.criterion[grid.index(chosen.bandwidth)] == np.nanmin(chosen.criterion)
    assert chosen.skipped == ()


def test_bandwidth_grid_must_not_be_empty():
    with pytest.raises(ModelValueError):
        select_bandwidth(uniform_pattern(10, 2), FirstOrder.uniform(2), [])


def test_nonparametric_pcf_is_symmetric_and_validates():
    pattern = uniform_pattern(120, 2, rng_seed=6)
    intensities = simple_intensities(pattern, 0.1, shape=SHAPE)
    forward = nonparam_pcf(pattern, intensities, 0, 1, R_GRID, 0.01)
    backward = nonparam_pcf(pattern, intensities, 1, 0, R_GRID, 0.01)
    assert np.array_equal(forward, backward)
    assert forward.shape == R_GRID.shape

    with pytest.raises(ModelValueError):
        nonparam_pcf(pattern, intensities, 0, 1, [0.0, 0.05], 0.01)
    with pytest.raises(ModelValueError):
        nonparam_pcf(pattern, intensities, 0, 1, R_GRID, 0.0)


@pytest.mark.slow
def test_independent_poisson_types_have_unit_cross_pcf():
    rho0 = ScalarField.constant(UNIT_SQUARE, 200.0, 32, 32)
    theta = Theta.independent([0.0, 0.0], [0.1, 0.1])
    r = np.linspace(0.03, 0.1, 8)
    intensities = (rho0, rho0)
    estimates = [nonparam_pcf(simulate_mlgcp(SimulationSpec(rho0, FirstOrder.uniform(2), theta, seed)),
                              intensities, 0, 1, r, 0.01) for seed in range(30)]
    assert np.abs(np.mean(estimates, axis=0) - 1.0).max() < 0.15


def test_ratio_of_identical_pairs_is_one():
    pattern = uniform_pattern(150, 3, rng_seed=7)
    ratio = pcf_ratio_nonparam(pattern, _first_order(), (1, 2), (1, 2), R_GRID, 0.01)
    assert np.allclose(ratio[np.isfinite(ratio)], 1.0)
    assert np.isfinite(ratio).all()


def test_ratio_bandwidth_defaults_to_silverman():
    pattern = uniform_pattern(150, 3, rng_seed=7)
    ratio = pcf_ratio_nonparam(pattern, _first_order(), (0, 1), (1, 1), R_GRID)
    assert ratio.shape == R_GRID.shape
    assert np.all(ratio[np.isfinite(ratio)] > 0)
    assert np.isnan(silverman_bandwidth([0.1]))

    with pytest.raises(ModelValueError):
        pcf_ratio_nonparam(pattern, _first_order(), (0, 3), (1, 1), R_GRID)


def test_mise_is_zero_for_the_truth():
    theta = Theta([[0.5], [-0.5]], [0.03], [0.4, 0.4], [0.02, 0.04])
    truth = pcf_curves(theta, R_GRID)
    assert mise(truth[None], theta, R_GRID) == 0.0


def test_mise_of_constant_error():
    theta = Theta.independent([0.5], [0.05])
    estimate = pcf_curves(theta, R_GRID) + 0.3
    assert mise(estimate[None], theta, R_GRID) == pytest.approx(0.09 * 0.3 ** 2)


def test_mise_scopes_add_up():
    rng = np.random.default_rng(8)
    theta = Theta([[0.5, 0.1], [-0.2, 0.3], [-0.3, -0.4]], [0.03, 0.05], [0.4, 0.3, 0.2], [0.02, 0.04, 0.03])
    estimates = pcf_curves(theta, R_GRID)[None] + rng.normal(scale=0.1, size=(4, 3, 3, len(R_GRID)))

    total = mise(estimates, theta, R_GRID, 'total')
    within = mise(estimates, theta, R_GRID, 'within')
    between = mise(estimates, theta, R_GRID, 'between')
    assert total == pytest.approx(within + between)
    assert mise(estimates, theta, R_GRID, 'total', average=True) == pytest.approx(total / 6)


def test_mise_accepts_curve_arrays_and_validates_scope():
    truth = np.ones((2, 2, len(R_GRID)))
    assert mise(truth + 0.1, truth, R_GRID, 'between') == pytest.approx(0.09 * 0.01)
    assert scope_mask(3, 'between').sum() == 3
    with pytest.raises(ModelValueError):
        mise(truth, truth, R_GRID, 'diagonal')


def test_area_estimate_is_close_to_the_window_area():
    pattern = uniform_pattern(500, 2, rng_seed=9)
    chosen = select_bandwidth(pattern, FirstOrder.uniform(2), [0.1, 0.15, 0.2], shape=SHAPE)
    assert 0.9 <= chosen.omega <= 1.1
