"""Kernel weights, cross-validated bandwidth, m_hat and the beta_hat estimate."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .config import DEFAULTS
from .core import DesignGrid, DifferenceSequence, Sample
from .errors import (
    BandwidthTooSmallError,
    ContractError,
    InsufficientDataError,
    NoValidBandwidthError,
)

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-10


class Method(str, Enum):
    NW = "nw"
    LOCAL_LINEAR = "local_linear"


def _epanechnikov(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u**2), 0.0)


def _biweight(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) <= 1.0, (15.0 / 16.0) * (1.0 - u**2) ** 2, 0.0)


def _triangular(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) <= 1.0, 1.0 - np.abs(u), 0.0)


# symmetric, supported on [-1, 1], bounded by 1 and >= kappa on |u| <= 1/2
KERNELS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "epanechnikov": _epanechnikov,
    "biweight": _biweight,
    "triangular": _triangular,
}


def resolve_method(method: str | Method) -> Method:
    try:
        return Method(method)
    except ValueError as exc:
        raise ContractError(f"unknown smoothing method {method!r}; use 'nw' or 'local_linear'") from exc


@dataclass(frozen=True)
class KernelSpec:
    shape: str
    bandwidth: float

    def __post_init__(self) -> None:
        if self.shape not in KERNELS:
            raise ContractError(f"unknown kernel {self.shape!r}; builtin: {', '.join(sorted(KERNELS))}")
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0.0:
            raise ContractError(f"bandwidth must be positive, got {self.bandwidth!r}")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return KERNELS[self.shape](u)


@dataclass(frozen=True)
class WeightMatrix:
    """Row i holds the smoothing weights w_ij used at t_i."""

    rows: np.ndarray
    method: Method
    bandwidth: float

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=float)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True)
class BetaEstimate:
    """Values of the standardizing function at the design points."""

    values: np.ndarray
    floor_applied: np.ndarray
    floor: float

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        flags = np.array(self.floor_applied, dtype=bool)
        if values.ndim != 1 or flags.shape != values.shape:
            raise ContractError("beta values and floor flags must be 1-d and of equal length")
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise ContractError("beta values must be finite and positive")
        values.setflags(write=False)
        flags.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "floor_applied", flags)

    @classmethod
    def known(cls, values: np.ndarray) -> "BetaEstimate":
        """Wrap true beta values (no flooring) for the known-beta path."""

        values = np.asarray(values, dtype=float)
        return cls(values, np.zeros(values.shape, dtype=bool), 0.0)

    @property
    def floor_count(self) -> int:
        return int(self.floor_applied.sum())

    def scaled(self, factor: float) -> "BetaEstimate":
        return BetaEstimate(self.values * factor, self.floor_applied, self.floor * factor)


def kernel_weights(grid: DesignGrid, kernel: KernelSpec, method: str | Method = Method.LOCAL_LINEAR) -> WeightMatrix:
    """Nadaraya-Watson or local-linear weights at every design point."""

    method = resolve_method(method)
    t = grid.points
    h = kernel.bandwidth
    offsets = t[None, :] - t[:, None]
    k = kernel(offsets / h)

    if method is Method.NW:
        s0 = k.sum(axis=1)
        empty = np.flatnonzero(s0 <= 0.0)
        if empty.size:
            raise BandwidthTooSmallError(int(empty[0]), h)
        rows = k / s0[:, None]
    else:
        s0 = k.sum(axis=1)
        s1 = (k * offsets).sum(axis=1)
        s2 = (k * offsets**2).sum(axis=1)
        det = s0 * s2 - s1**2
        degenerate = np.flatnonzero(~(det > 1e-12 * s0 * s2))
        if degenerate.size:
            raise BandwidthTooSmallError(int(degenerate[0]), h, "fewer than two points in local-linear window")
        rows = k * (s2[:, None] - offsets * s1[:, None]) / det[:, None]
        # equivalent kernel: exact up to rounding, renormalize the drift away
        rows = rows / rows.sum(axis=1, keepdims=True)

    return WeightMatrix(rows, method, h)


def clip_negative(weights: WeightMatrix) -> WeightMatrix:
    """Zero the negative (boundary) weights and renormalize every row to one."""

    rows = np.clip(weights.rows, 0.0, None)
    return WeightMatrix(rows / rows.sum(axis=1, keepdims=True), weights.method, weights.bandwidth)


def outer_weights(grid: DesignGrid, kernel: KernelSpec, method: str | Method = Method.NW) -> WeightMatrix:
    """Non-negative weights for the fourth-moment sum of beta_hat."""

    weights = kernel_weights(grid, kernel, method)
    if weights.method is Method.LOCAL_LINEAR:
        return clip_negative(weights)
    return weights


def beta_bandwidth(
    grid: DesignGrid,
    h_cv: float,
    factor: float = DEFAULTS.beta_bandwidth_factor,
    min_points: int = DEFAULTS.beta_min_points,
) -> float:
    """factor * h_CV, widened until every window spans min_points consecutive design points."""

    t = grid.points
    k = min(int(min_points), grid.n)
    span = float(np.max(t[k - 1 :] - t[: t.size - k + 1])) if k > 1 else 0.0
    return max(factor * h_cv, span)


def residual_leverage(weights: WeightMatrix) -> np.ndarray:
    """(1 - w_ii)^2 + sum_{j != i} w_ij^2: variance of Y_i - m_hat(t_i) in units of sigma^2(t_i)."""

    rows = weights.rows
    return 1.0 - 2.0 * np.diag(rows) + np.einsum("ij,ij->i", rows, rows)


def m_hat(sample: Sample, weights: WeightMatrix) -> np.ndarray:
    """Fitted values m_h(t_i) = sum_j w_ij Y_j."""

    if weights.n != sample.n:
        raise ContractError(f"weights built for n={weights.n}, sample has n={sample.n}")
    return weights.rows @ sample.responses


def bandwidth_grid(n: int, size: int = DEFAULTS.cv_grid_size, upper: float = DEFAULTS.cv_max_bandwidth) -> np.ndarray:
    return np.geomspace(1.0 / n, upper, size)


def cv_score(sample: Sample, weights: WeightMatrix) -> float:
    """Leave-one-out squared prediction error by weight-row renormalization."""

    diagonal = np.diag(weights.rows)
    keep = 1.0 - diagonal
    if np.any(keep <= 1e-10):
        raise BandwidthTooSmallError(int(np.flatnonzero(keep <= 1e-10)[0]), weights.bandwidth, "leave-one-out window empty")
    fitted = weights.rows @ sample.responses
    loo = (fitted - diagonal * sample.responses) / keep
    return float(np.sum((sample.responses - loo) ** 2))


def cv_bandwidth(
    sample: Sample,
    shape: str = DEFAULTS.kernel,
    method: str | Method = Method.LOCAL_LINEAR,
    grid_size: int = DEFAULTS.cv_grid_size,
) -> float:
    """Least squares cross-validation over a log-spaced bandwidth grid."""

    if sample.n < 10:
        raise InsufficientDataError(f"cross-validation needs n >= 10, got n={sample.n}")

    candidates = bandwidth_grid(sample.n, grid_size)
    scores = np.full(candidates.shape, np.inf)
    for k, h in enumerate(candidates):
        try:
            weights = kernel_weights(sample.grid, KernelSpec(shape, float(h)), method)
            scores[k] = cv_score(sample, weights)
        except BandwidthTooSmallError:
            continue

    finite = np.isfinite(scores)
    if not finite.any():
        raise NoValidBandwidthError(f"no candidate bandwidth in [{candidates[0]:.4g}, {candidates[-1]:.4g}] gave a valid fit")

    best = scores[finite].min()
    # flat scores (e.g. constant data) tie to the smallest bandwidth
    slack = 1e-10 * best + 1e-20 * sample.n * (1.0 + float(np.max(sample.responses**2)))
    chosen = float(candidates[np.flatnonzero(finite & (scores <= best + slack))[0]])
    logger.debug("[VF][TEST] cv bandwidth=%.6g score=%.6g", chosen, best)
    return chosen


def beta_hat(
    sample: Sample,
    weights: WeightMatrix,
    seq: DifferenceSequence,
    fitted: np.ndarray | None = None,
    floor_factor: float = DEFAULTS.beta_floor_factor,
    leverage: np.ndarray | None = None,
) -> BetaEstimate:
    """Smoothed fourth-moment estimate of beta = (m4 - 1 + 4 delta_r) sigma^4.

    With leverage (see residual_leverage) each residual Y_j - m_hat(t_j) is
    first divided by sqrt(leverage_j), which removes the shrinkage the mean
    fit puts on the residuals.
    """

    n, r = sample.n, seq.order
    if n <= r + 1:
        raise InsufficientDataError(f"beta_hat needs n > r + 1 (n={n}, r={r})")
    if weights.n != n:
        raise ContractError(f"weights built for n={weights.n}, sample has n={n}")
    if fitted is None:
        fitted = m_hat(sample, weights)
    fitted = np.asarray(fitted, dtype=float)
    if fitted.shape != (n,):
        raise ContractError("fitted values must have one entry per design point")

    residuals = sample.responses - fitted
    scale = max(1.0, float(np.max(np.abs(sample.responses))))
    residuals = np.where(np.abs(residuals) <= 1e-12 * scale, 0.0, residuals)
    if leverage is not None:
        leverage = np.asarray(leverage, dtype=float)
        if leverage.shape != (n,):
            raise ContractError("leverage must have one entry per design point")
        # an interpolated point has zero residual and zero leverage
        residuals = residuals / np.sqrt(np.maximum(leverage, 1e-12))
    squares = residuals**2

    fourth = weights.rows @ squares**2
    cross = weights.rows[:, : n - r - 1] @ (squares[: n - r - 1] * squares[r + 1 :])
    raw = fourth + seq.correction * cross

    positive = fourth[fourth > 0.0]
    if positive.size:
        floor = floor_factor * float(np.median(positive))
    else:
        floor = DEFAULTS.beta_floor_fallback
    flags = ~(raw >= floor)
    if flags.any():
        logger.info("[VF][TEST] beta floor applied at %d of %d points (floor=%.3g)", int(flags.sum()), n, floor)
    return BetaEstimate(np.where(flags, floor, raw), flags, floor)
