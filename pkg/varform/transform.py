"""Empirical martingale transform T_n, the H_n field and the test statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULTS
from .core import DesignGrid
from .errors import ContractError, SingularFieldError
from .process import StepProcess
from .smoothing import BetaEstimate


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class HnField:
    """H_n(t_j), its inverse and condition number for every t_j <= t0."""

    points: np.ndarray
    matrices: np.ndarray
    inverses: np.ndarray
    conditions: np.ndarray
    t0: float
    n: int

    def __post_init__(self) -> None:
        for name in ("points", "matrices", "inverses", "conditions"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def max_condition(self) -> float:
        return float(self.conditions.max())


@dataclass(frozen=True)
class TransformedProcess:
    """(T_n eta)(t_j) for the design points up to t0."""

    points: np.ndarray
    values: np.ndarray
    t0: float
    f_n_t0: float
    n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", _frozen(self.points))
        object.__setattr__(self, "values", _frozen(self.values))
        if not np.all(np.isfinite(self.values)):
            raise ContractError("transformed process has non-finite values")


def _check_inputs(n: int, gradient: np.ndarray, beta: BetaEstimate) -> np.ndarray:
    gradient = np.asarray(gradient, dtype=float)
    if gradient.ndim == 1:
        gradient = gradient[:, None]
    if gradient.shape[0] != n or beta.values.shape != (n,):
        raise ContractError("gradient and beta must have one row per design point")
    return gradient


def hn_field(grid: DesignGrid, gradient: np.ndarray, beta: BetaEstimate, t0: float = DEFAULTS.t0) -> HnField:
    """H_n(t_j) = (1/n) sum_{t_i >= t_j} g g^T / beta over t_j <= t0."""

    if not 0.0 < t0 <= 1.0:
        raise ContractError(f"t0 must lie in (0, 1], got {t0!r}")
    n = grid.n
    g = _check_inputs(n, gradient, beta)
    d = g.shape[1]
    m = int(np.searchsorted(grid.points, t0, side="right"))
    if m == 0:
        raise ContractError(f"no design point lies in [0, t0] for t0={t0}")

    outer = (g[:, :, None] * g[:, None, :]) / beta.values[:, None, None]
    tails = np.cumsum(outer[::-1], axis=0)[::-1] / n
    matrices = tails[:m]

    for j in range(m):
        if n - j < d:
            raise SingularFieldError(float(grid.points[j]), f"only {n - j} point(s) at or above it for dimension d={d}")
    conditions = np.linalg.cond(matrices)
    bad = np.flatnonzero(~(conditions < DEFAULTS.max_condition))
    if bad.size:
        j = int(bad[0])
        raise SingularFieldError(float(grid.points[j]), f"condition number {conditions[j]:.3g}")

    identity = np.broadcast_to(np.eye(d), matrices.shape)
    inverses = np.linalg.solve(matrices, identity)
    # symmetrize to remove solver asymmetry at rounding level
    inverses = 0.5 * (inverses + np.swapaxes(inverses, 1, 2))
    return HnField(grid.points[:m], matrices, inverses, conditions, float(t0), n)


def apply_transform(
    eta: StepProcess,
    field: HnField,
    gradient: np.ndarray,
    beta: BetaEstimate,
    path: str = "fast",
) -> TransformedProcess:
    """(T_n eta)(t) = eta(t) - sum_{t_j<=t} (1/n) beta^{-1/2} g^T H_n^{-1} U(t_j).

    U(t_j) = sum_{t_i >= t_j} beta^{-1/2}(t_i) g(t_i) * jump of eta at t_i.
    The fast path accumulates U by suffix sums; the reference path is the
    plain double loop.
    """

    n = eta.points.size
    if n != field.n:
        raise ContractError(f"process has {n} points, H_n field was built for n={field.n}")
    g = _check_inputs(n, gradient, beta)
    if g.shape[1] != field.matrices.shape[1]:
        raise ContractError("gradient dimension does not match the H_n field")

    m = field.size
    scaled = g / np.sqrt(beta.values)[:, None]
    jumps = eta.jumps()

    if path == "fast":
        suffix = np.cumsum((scaled * jumps[:, None])[::-1], axis=0)[::-1][:m]
        increments = np.einsum("jk,jkl,jl->j", scaled[:m], field.inverses, suffix) / n
        values = eta.values[:m] - np.cumsum(increments)
    elif path == "reference":
        terms = np.empty(m)
        for j in range(m):
            inner = np.zeros(g.shape[1])
            for i in range(j, n):
                inner += scaled[i] * jumps[i]
            terms[j] = scaled[j] @ field.inverses[j] @ inner / n
        values = np.empty(m)
        correction = 0.0
        for k in range(m):
            correction += terms[k]
            values[k] = eta.values[k] - correction
    else:
        raise ContractError(f"unknown transform path {path!r}")

    return TransformedProcess(eta.points[:m], values, field.t0, m / n, n)


def statistics(tp: TransformedProcess) -> tuple[float, float]:
    """(G_normalized, K_normalized) on [0, t0], rescaled to unit-interval laws."""

    if tp.values.size == 0:
        raise ContractError("transformed process is empty")
    f0 = tp.f_n_t0
    g_stat = float(np.sum(tp.values**2) / tp.n / f0**2)
    k_stat = float(np.max(np.abs(tp.values)) / np.sqrt(f0))
    return g_stat, k_stat


def raw_statistics(lambda_: StepProcess) -> tuple[float, float]:
    """Untransformed (G_n, K_n) of Lambda_n over all design points."""

    n = lambda_.values.size
    return float(np.sum(lambda_.values**2) / n), float(np.max(np.abs(lambda_.values)))

