import math

import numpy as np
import pytest

from varform.core import PseudoResiduals, Sample, build_design, difference_sequence, pseudo_residuals
from varform.errors import CollinearBasisError, ContractError, UsageError
from varform.families import affine_family, resolve_family
from varform.process import StepProcess, fit_family, lambda_process
from varform.smoothing import BetaEstimate


def _residuals_for(squares, order=1):
    return PseudoResiduals(np.sqrt(np.asarray(squares, dtype=float)), order)


def test_resolve_family_parses_span_and_offset():
    family = resolve_family("const,t2")
    assert family.is_affine and family.dim == 2
    assert family.name == "span(const,t2)"

    offset = resolve_family("t2@const")
    t = np.array([0.0, 0.5, 1.0])
    assert offset.dim == 1
    assert np.allclose(offset.offset_values(t), 1.0)
    assert np.allclose(offset.design_matrix(t)[:, 0], t**2)


def test_resolve_family_rejects_unknown_basis():
    with pytest.raises(UsageError, match="unknown basis"):
        resolve_family("const,cubic")


def test_unit_basis_fit_is_mean_of_squares():
    grid = build_design("uniform", 12)
    rng = np.random.default_rng(2)
    squares = rng.uniform(0.5, 2.0, size=11)
    gram = fit_family(affine_family(["const"]), _residuals_for(squares), grid)
    assert gram.a_hat[0, 0] == pytest.approx(1.0)
    assert gram.theta_hat[0] == pytest.approx(squares.mean(), rel=1e-12)


def test_affine_fit_matches_normal_equations():
    grid = build_design("uniform", 40)
    rng = np.random.default_rng(8)
    squares = rng.uniform(0.1, 3.0, size=39)
    gram = fit_family(resolve_family("const,t2"), _residuals_for(squares), grid)

    t = grid.points
    g = np.column_stack([np.ones(40), t**2])
    a_hat = g.T @ g / 40
    c_hat = g[1:].T @ squares / 39
    assert np.allclose(gram.theta_hat, np.linalg.solve(a_hat, c_hat), rtol=1e-10)
    assert np.allclose(gram.a_hat @ gram.theta_hat, gram.c_hat, rtol=1e-10)


def test_affine_fit_recovers_target_in_span():
    # the 1/n and 1/(n - r) normalizations differ by O(1/n)
    grid = build_design("uniform", 1000)
    t = grid.points
    gram = fit_family(resolve_family("const,t2"), _residuals_for(2.0 + 5.0 * t[1:] ** 2), grid)
    assert np.allclose(gram.theta_hat, [2.0, 5.0], atol=0.05)


def test_collinear_basis_rejected():
    grid = build_design("uniform", 10)
    with pytest.raises(CollinearBasisError, match="ill-conditioned"):
        fit_family(resolve_family("t,t"), _residuals_for(np.ones(9)), grid)


def test_nonlinear_fit_recovers_exponent():
    grid = build_design("uniform", 50)
    t = grid.points
    gram = fit_family(resolve_family("exp_t"), _residuals_for(np.exp(0.7 * t[1:])), grid)

    thetas = np.linspace(0.0, 2.0, 2001)
    losses = [np.mean((np.exp(0.7 * t[1:]) - np.exp(theta * t[1:])) ** 2) for theta in thetas]
    assert gram.theta_hat[0] == pytest.approx(0.7, abs=1e-6)
    assert abs(gram.theta_hat[0] - thetas[int(np.argmin(losses))]) <= 1e-3


def test_zero_targets_give_zero_lambda():
    grid = build_design("uniform", 10)
    sample = Sample(grid, np.zeros(10))
    residuals = _residuals_for(np.zeros(9))
    family = affine_family(["const"])
    gram = fit_family(family, residuals, grid)
    parts = lambda_process(sample, residuals, family, gram, BetaEstimate.known(np.ones(10)))
    assert np.allclose(parts.lambda_.values, 0.0)


def test_lambda_three_point_hand_case():
    grid = build_design("uniform", 3)
    sample = Sample(grid, [0.0, 1.0, 3.0])
    residuals = _residuals_for([1.0, 4.0])
    family = affine_family(["const"])
    gram = fit_family(family, residuals, grid)
    parts = lambda_process(sample, residuals, family, gram, BetaEstimate.known(np.ones(3)))

    root3 = math.sqrt(3.0)
    assert np.allclose(parts.c_part.values, root3 / 2.0 * np.array([0.0, 1.0, 5.0]))
    assert np.allclose(parts.d_part.values, root3 * 2.5 * np.array([1.0, 2.0, 3.0]) / 3.0)
    assert np.allclose(parts.lambda_.values, root3 * np.array([-5.0 / 6.0, -7.0 / 6.0, 0.0]))


def _random_parts(family, n=60, seed=4, beta=None):
    grid = build_design("uniform", n)
    rng = np.random.default_rng(seed)
    sample = Sample(grid, 1.0 + grid.points + np.sqrt(0.5 + 3.0 * grid.points**2) * rng.standard_normal(n))
    residuals = pseudo_residuals(sample, difference_sequence(1))
    if beta is None:
        beta = BetaEstimate.known(rng.uniform(1.0, 4.0, size=n))
    gram = fit_family(family, residuals, grid)
    return lambda_process(sample, residuals, family, gram, beta), beta


def test_beta_scaling_halves_lambda():
    family = resolve_family("const,t2")
    parts, beta = _random_parts(family)
    scaled, _ = _random_parts(family, beta=beta.scaled(4.0))
    assert np.allclose(scaled.lambda_.values, 0.5 * parts.lambda_.values, rtol=1e-12, atol=1e-14)


def test_lambda_invariant_under_reparameterization():
    family = resolve_family("const,t2")
    parts, beta = _random_parts(family)
    matrix = np.array([[2.0, 1.0], [-0.5, 3.0]])
    reparam, _ = _random_parts(family.reparameterized(matrix), beta=beta)
    assert np.allclose(reparam.lambda_.values, parts.lambda_.values, atol=1e-8)


def test_lambda_rejects_mismatched_beta():
    family = affine_family(["const"])
    grid = build_design("uniform", 5)
    sample = Sample(grid, np.arange(5.0))
    residuals = pseudo_residuals(sample, difference_sequence(1))
    gram = fit_family(family, residuals, grid)
    with pytest.raises(ContractError):
        lambda_process(sample, residuals, family, gram, BetaEstimate.known(np.ones(4)))


def test_step_process_is_right_continuous():
    process = StepProcess(np.array([0.25, 0.5, 0.75]), np.array([1.0, 3.0, 2.0]))
    assert process.at(0.1) == 0.0
    assert process.at(0.5) == 3.0
    assert process.at(0.6) == 3.0
    assert process.jumps().tolist() == [1.0, 2.0, -1.0]
