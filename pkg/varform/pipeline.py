"""End-to-end variance-form test."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import DifferenceSequence, Sample, difference_sequence, pseudo_residuals
from .errors import ContractError, DegenerateVarianceError
from .families import VarianceFamily, resolve_family
from .limits import Law, critical_values, limit_sample
from .process import LambdaParts, lambda_process, fit_family
from .schemas import TestConfig, TestDiagnostics, TestReport, alpha_key
from .smoothing import (
    BetaEstimate,
    KernelSpec,
    beta_bandwidth,
    beta_hat,
    cv_bandwidth,
    kernel_weights,
    m_hat,
    outer_weights,
    residual_leverage,
)
from .transform import TransformedProcess, apply_transform, hn_field, raw_statistics, statistics

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TestRun:
    """Report plus the trajectories it was computed from."""

    __test__ = False

    report: TestReport
    parts: LambdaParts
    transformed: TransformedProcess
    beta: BetaEstimate


def sequence_for(config: TestConfig) -> DifferenceSequence:
    if config.coefficients is not None:
        return difference_sequence(config.coefficients)
    return difference_sequence(config.order)


def execute_test(
    sample: Sample,
    family: VarianceFamily | str,
    config: TestConfig | None = None,
    known_beta: np.ndarray | None = None,
) -> TestRun:
    """h_CV -> m_hat -> beta_hat -> residuals -> theta_hat -> Lambda_n -> T_n Lambda_n -> decision."""

    config = config or TestConfig()
    family = resolve_family(family)
    seq = sequence_for(config)

    if config.bandwidth == "auto":
        h = cv_bandwidth(sample, config.kernel, config.method)
    else:
        h = float(config.bandwidth)
    mean_weights = kernel_weights(sample.grid, KernelSpec(config.kernel, h), config.method)
    fitted = m_hat(sample, mean_weights)
    h_beta = beta_bandwidth(sample.grid, h, config.beta_bandwidth_factor)

    if known_beta is not None:
        known_beta = np.asarray(known_beta, dtype=float)
        if known_beta.shape != (sample.n,):
            raise ContractError("known beta needs one value per design point")
        beta = BetaEstimate.known(known_beta)
    else:
        outer = outer_weights(sample.grid, KernelSpec(config.kernel, h_beta), config.beta_method)
        leverage = residual_leverage(mean_weights) if config.studentize else None
        beta = beta_hat(sample, outer, seq, fitted=fitted, leverage=leverage)
        if beta.floor_applied.all():
            raise DegenerateVarianceError("every beta_hat value hit the positivity floor; residuals carry no variance")

    residuals = pseudo_residuals(sample, seq)
    gram = fit_family(family, residuals, sample.grid)
    parts = lambda_process(sample, residuals, family, gram, beta)
    field = hn_field(sample.grid, gram.gradient, beta, config.t0)
    transformed = apply_transform(parts.lambda_, field, gram.gradient, beta)
    g_stat, k_stat = statistics(transformed)
    raw_g, raw_k = raw_statistics(parts.lambda_)

    crit = critical_values(
        config.alphas, Law.INT_W2, config.critval_samples, config.critval_seed, config.kl_terms, workers=config.workers
    )
    law = limit_sample(Law.INT_W2, config.critval_samples, config.critval_seed, config.kl_terms, workers=config.workers)

    k_crit: dict[float, float] = {}
    if config.ks_test:
        k_crit = critical_values(
            config.alphas, Law.SUP_W, config.critval_samples, config.critval_seed, n_steps=config.path_steps,
            workers=config.workers,
        )

    report = TestReport(
        g_normalized=g_stat,
        k_normalized=k_stat,
        critical_values={alpha_key(a): w for a, w in crit.items()},
        decisions={alpha_key(a): bool(g_stat >= w) for a, w in crit.items()},
        p_value=law.p_value(g_stat),
        k_critical_values={alpha_key(a): w for a, w in k_crit.items()},
        k_decisions={alpha_key(a): bool(k_stat >= w) for a, w in k_crit.items()},
        diagnostics=TestDiagnostics(
            n=sample.n,
            order=seq.order,
            family=family.name,
            method=config.method,
            kernel=config.kernel,
            h_cv=h,
            h_beta=h_beta,
            beta_method=config.beta_method,
            studentized=config.studentize,
            t0=config.t0,
            f_n_t0=transformed.f_n_t0,
            max_condition=field.max_condition,
            gram_condition=gram.condition,
            floor_count=beta.floor_count,
            theta_hat=[float(v) for v in gram.theta_hat],
            raw_g=raw_g,
            raw_k=raw_k,
            critval_samples=config.critval_samples,
            critval_seed=config.critval_seed,
            known_beta=known_beta is not None,
        ),
    )
    logger.debug("[VF][TEST] n=%d G=%.6g K=%.6g p=%.4g", sample.n, g_stat, k_stat, report.p_value)
    return TestRun(report, parts, transformed, beta)


def run_test(
    sample: Sample,
    family: VarianceFamily | str,
    config: TestConfig | None = None,
    known_beta: np.ndarray | None = None,
) -> TestReport:
    """Run the martingale-transform test and return its report."""

    return execute_test(sample, family, config, known_beta).report
