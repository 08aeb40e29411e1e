"""Gram system, parameter fit and the standardized empirical process Lambda_n."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .config import DEFAULTS
from .core import DesignGrid, PseudoResiduals, Sample
from .errors import CollinearBasisError, ContractError, FitFailureError, InsufficientDataError
from .families import VarianceFamily
from .smoothing import BetaEstimate

logger = logging.getLogger(__name__)

GN_MAX_ITERATIONS = 200
GN_GRADIENT_TOLERANCE = 1e-9
GN_MAX_HALVINGS = 40
GN_STEP_TOLERANCE = 1e-12


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GramSystem:
    """A_hat, C_hat and theta_hat, plus the gradient g(t_k) they were built from."""

    a_hat: np.ndarray
    c_hat: np.ndarray
    theta_hat: np.ndarray
    gradient: np.ndarray
    fitted: np.ndarray
    targets: np.ndarray
    condition: float

    def __post_init__(self) -> None:
        for name in ("a_hat", "c_hat", "theta_hat", "gradient", "fitted", "targets"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def dim(self) -> int:
        return int(self.theta_hat.size)


@dataclass(frozen=True)
class StepProcess:
    """Right-continuous step function with jumps only at the design points."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        points, values = _frozen(self.points), _frozen(self.values)
        if points.shape != values.shape or points.ndim != 1:
            raise ContractError("step process needs one value per design point")
        if not np.all(np.isfinite(values)):
            raise ContractError("step process values must be finite")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    def jumps(self) -> np.ndarray:
        return np.diff(self.values, prepend=0.0)

    def at(self, t: float | np.ndarray) -> float | np.ndarray:
        index = np.searchsorted(self.points, t, side="right") - 1
        padded = np.concatenate(([0.0], self.values))
        result = padded[index + 1]
        return float(result) if np.ndim(result) == 0 else result

    def __sub__(self, other: "StepProcess") -> "StepProcess":
        return StepProcess(self.points, self.values - other.values)

    def __add__(self, other: "StepProcess") -> "StepProcess":
        return StepProcess(self.points, self.values + other.values)

    def __mul__(self, factor: float) -> "StepProcess":
        return StepProcess(self.points, self.values * factor)

    __rmul__ = __mul__


@dataclass(frozen=True)
class LambdaParts:
    lambda_: StepProcess
    c_part: StepProcess
    d_part: StepProcess


def _check_condition(matrix: np.ndarray) -> float:
    condition = float(np.linalg.cond(matrix))
    if not np.isfinite(condition) or condition >= DEFAULTS.max_condition:
        raise CollinearBasisError(
            f"Gram matrix of the variance basis is singular or ill-conditioned (condition number {condition:.3g})"
        )
    return condition


def fit_family(family: VarianceFamily, residuals: PseudoResiduals, grid: DesignGrid) -> GramSystem:
    """Least squares fit of the variance family to squared pseudo residuals."""

    n, r = grid.n, residuals.order
    if n <= r or residuals.values.size != n - r:
        raise InsufficientDataError(f"need n > r and n - r residuals (n={n}, r={r}, residuals={residuals.values.size})")
    t = grid.points
    squares = residuals.squares

    if family.is_affine:
        g = family.design_matrix(t)
        targets = squares - family.offset_values(t[r:])
        a_hat = g.T @ g / n
        condition = _check_condition(a_hat)
        c_hat = g[r:].T @ targets / (n - r)
        theta = linalg.cho_solve(linalg.cho_factor(a_hat), c_hat)
        fitted = g @ theta
    else:
        theta = _gauss_newton(family, t[r:], squares)
        g = family.gradient_matrix(t, theta)
        targets = squares
        a_hat = g.T @ g / n
        condition = _check_condition(a_hat)
        c_hat = g[r:].T @ targets / (n - r)
        fitted = family.model_values(t, theta)

    logger.debug("[VF][TEST] family=%s theta=%s cond=%.3g", family.name, np.array2string(theta, precision=6), condition)
    return GramSystem(a_hat, c_hat, theta, g, fitted, targets, condition)


def _gauss_newton(family: VarianceFamily, t: np.ndarray, squares: np.ndarray) -> np.ndarray:
    """Damped Gauss-Newton with step halving for (1/m) sum (R^2 - sigma^2(t, theta))^2."""

    m = squares.size
    theta = np.asarray(family.start, dtype=float)

    def objective(params: np.ndarray) -> float:
        return float(np.mean((squares - family.model_values(t, params)) ** 2))

    current = objective(theta)
    trace = [current]
    for _ in range(GN_MAX_ITERATIONS):
        residual = squares - family.model_values(t, theta)
        jac = family.gradient_matrix(t, theta)
        grad_norm = float(np.linalg.norm(jac.T @ residual) * 2.0 / m)
        if grad_norm <= GN_GRADIENT_TOLERANCE:
            return theta
        step, *_ = np.linalg.lstsq(jac, residual, rcond=None)
        if np.linalg.norm(step) <= GN_STEP_TOLERANCE * (1.0 + np.linalg.norm(theta)):
            return theta

        scale = 1.0
        for _ in range(GN_MAX_HALVINGS):
            candidate = theta + scale * step
            value = objective(candidate)
            if np.isfinite(value) and value <= current:
                break
            scale *= 0.5
        else:
            raise FitFailureError("Gauss-Newton step halving found no descent", trace)

        theta, current = candidate, value
        trace.append(current)

    residual = squares - family.model_values(t, theta)
    grad_norm = float(np.linalg.norm(family.gradient_matrix(t, theta).T @ residual) * 2.0 / m)
    if grad_norm <= GN_GRADIENT_TOLERANCE:
        return theta
    raise FitFailureError(f"Gauss-Newton did not converge in {GN_MAX_ITERATIONS} iterations (gradient norm {grad_norm:.3g})", trace)


def lambda_process(
    sample: Sample,
    residuals: PseudoResiduals,
    family: VarianceFamily,
    gram: GramSystem,
    beta: BetaEstimate,
) -> LambdaParts:
    """Lambda_n = C_n - D_n at every design point, standardized by 1/beta."""

    n, r = sample.n, residuals.order
    if beta.values.shape != (n,) or gram.gradient.shape[0] != n or residuals.values.size != n - r:
        raise ContractError("sample, residuals, Gram system and beta must share the same design grid")
    if gram.gradient.shape[1] != family.dim:
        raise ContractError(f"Gram system has dimension {gram.gradient.shape[1]}, family has {family.dim}")

    root_n = np.sqrt(n)
    inv_sqrt_beta = 1.0 / np.sqrt(beta.values)

    c_terms = np.zeros(n)
    c_terms[r:] = inv_sqrt_beta[r:] * gram.targets
    c_part = root_n / (n - r) * np.cumsum(c_terms)

    if family.is_affine:
        # B_t^T A^{-1} (sqrt(n)/(n-r)) sum (R^2 - b) g, with B_t^i = (1/n) sum 1{t_j<=t} beta^{-1/2} sigma_i^2
        b_t = np.cumsum(inv_sqrt_beta[:, None] * gram.gradient, axis=0) / n
        d_part = b_t @ linalg.cho_solve(linalg.cho_factor(gram.a_hat), root_n * gram.c_hat)
    else:
        d_part = root_n / n * np.cumsum(inv_sqrt_beta * gram.fitted)

    points = sample.points
    c_process = StepProcess(points, c_part)
    d_process = StepProcess(points, d_part)
    return LambdaParts(c_process - d_process, c_process, d_process)
