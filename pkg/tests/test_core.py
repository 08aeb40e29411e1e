import math

import numpy as np
import pytest

from varform.core import (
    DesignGrid,
    PseudoResiduals,
    Sample,
    build_design,
    difference_sequence,
    empirical_cdf,
    pseudo_residuals,
)
from varform.errors import ContractError, InsufficientDataError, InvalidDensityError, InvalidSequenceError

R2_EXACT = ((1.0 + math.sqrt(5.0)) / 4.0, -0.5, -(math.sqrt(5.0) - 1.0) / 4.0)


def test_uniform_design_is_exact():
    grid = build_design("uniform", 3)
    assert grid.points.tolist() == [0.25, 0.5, 0.75]
    assert build_design("uniform", 1).points.tolist() == [0.5]


def test_linear_density_matches_closed_form_inverse():
    grid = build_design("linear", 4)
    expected = np.sqrt(np.arange(1, 5) / 5.0)
    assert np.allclose(grid.points, expected, atol=1e-9)


def test_custom_density_cdf_hits_levels():
    total = 1.0 + 1e-3
    grid = build_design(lambda t: (6.0 * t * (1.0 - t) + 1e-3) / total, 9)

    t = grid.points
    cdf = (3.0 * t**2 - 2.0 * t**3 + 1e-3 * t) / total
    assert np.all(np.diff(t) > 0)
    assert np.max(np.abs(cdf - np.arange(1, 10) / 10.0)) <= 1e-10


def test_negative_density_rejected():
    with pytest.raises(InvalidDensityError, match="not positive"):
        build_design(lambda t: 4.0 * t - 1.0, 5)


def test_density_must_integrate_to_one():
    with pytest.raises(InvalidDensityError, match="integrates"):
        build_design(lambda t: 2.0, 5)


def test_design_size_must_be_positive():
    with pytest.raises(ContractError):
        build_design("uniform", 0)


def test_grid_rejects_unsorted_points():
    with pytest.raises(ContractError, match="strictly increasing"):
        DesignGrid.from_points([0.1, 0.3, 0.2])


def test_sample_length_must_match_grid():
    with pytest.raises(ContractError, match="does not match"):
        Sample(build_design("uniform", 3), [1.0, 2.0])


def test_builtin_order_one_sequence():
    seq = difference_sequence(1)
    assert seq.coefficients == (1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0))
    assert seq.delta == pytest.approx(0.25, abs=1e-15)
    assert seq.correction == pytest.approx(0.0, abs=1e-15)


def test_higher_builtin_order_needs_coefficients():
    with pytest.raises(InvalidSequenceError, match="explicit coefficients"):
        difference_sequence(2)


def test_sequence_constraints_named_in_errors():
    with pytest.raises(InvalidSequenceError, match="sum of coefficients"):
        difference_sequence([1.0, -0.5])
    with pytest.raises(InvalidSequenceError, match="sum of squared"):
        difference_sequence([1.0, -1.0])


def test_order_two_delta_matches_brute_force():
    seq = difference_sequence(R2_EXACT)
    d0, d1, d2 = R2_EXACT
    assert seq.order == 2
    assert seq.delta == pytest.approx((d0 * d1 + d1 * d2) ** 2 + (d0 * d2) ** 2, rel=1e-12)


def test_pseudo_residuals_two_points():
    sample = Sample(build_design("uniform", 2), [1.0, 3.0])
    residuals = pseudo_residuals(sample, difference_sequence(1))
    assert residuals.order == 1
    assert residuals.values.tolist() == pytest.approx([math.sqrt(2.0)])


def test_pseudo_residuals_annihilate_constants():
    sample = Sample(build_design("uniform", 8), np.full(8, 4.2))
    residuals = pseudo_residuals(sample, difference_sequence(1))
    assert np.allclose(residuals.values, 0.0, atol=1e-14)


def test_pseudo_residuals_match_direct_sum():
    rng = np.random.default_rng(11)
    y = rng.normal(size=10)
    seq = difference_sequence(R2_EXACT)
    residuals = pseudo_residuals(Sample(build_design("uniform", 10), y), seq)

    expected = [sum(R2_EXACT[i] * y[j - i] for i in range(3)) for j in range(2, 10)]
    assert isinstance(residuals, PseudoResiduals)
    assert np.allclose(residuals.values, expected, rtol=1e-14, atol=1e-14)


def test_pseudo_residuals_need_more_points_than_order():
    with pytest.raises(InsufficientDataError):
        pseudo_residuals(Sample(build_design("uniform", 2), [1.0, 2.0]), difference_sequence(R2_EXACT))


def test_empirical_cdf_counts_points():
    grid = build_design("uniform", 3)
    assert empirical_cdf(grid, 0.5) == pytest.approx(2.0 / 3.0)
    assert empirical_cdf(grid, 0.0) == 0.0
    assert empirical_cdf(grid, 1.0) == 1.0
