"""Simulated limit laws of the transformed statistics.

int_W2 is the law of the integral of W(t)^2 over [0, 1], sup_W the law of
sup |W(t)| over [0, 1], for a standard Brownian motion W. Draws are made in
fixed-size blocks, each block with its own counter-based Philox stream keyed
by (seed, block index), so the result does not depend on the worker count.
"""

from __future__ import annotations

import logging
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Sequence

import numpy as np

from .config import DEFAULTS
from .errors import ContractError

logger = logging.getLogger(__name__)


class Law(str, Enum):
    INT_W2 = "int_W2"
    SUP_W = "sup_W"


@dataclass(frozen=True)
class LimitSample:
    """Sorted Monte Carlo draws from a limit law."""

    law: Law
    draws: np.ndarray
    seed: int
    method: str

    @property
    def size(self) -> int:
        return int(self.draws.size)

    def quantile(self, alpha: float) -> float:
        return float(np.quantile(self.draws, 1.0 - alpha))

    def cdf(self, x: float | np.ndarray) -> float | np.ndarray:
        return np.searchsorted(self.draws, x, side="right") / self.size

    def p_value(self, statistic: float) -> float:
        """Share of draws at or above the statistic."""

        return float(1.0 - np.searchsorted(self.draws, statistic, side="left") / self.size)


def block_stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def _kl_block(rng: np.random.Generator, size: int, n_terms: int) -> np.ndarray:
    k = np.arange(1, n_terms + 1)
    eigenvalues = 1.0 / ((k - 0.5) ** 2 * np.pi**2)
    z = rng.standard_normal((size, n_terms))
    return (z * z) @ eigenvalues


def _paths(rng: np.random.Generator, size: int, n_steps: int) -> np.ndarray:
    return np.cumsum(rng.standard_normal((size, n_steps)) * np.sqrt(1.0 / n_steps), axis=1)


def _path_integral_block(rng: np.random.Generator, size: int, n_steps: int) -> np.ndarray:
    w2 = _paths(rng, size, n_steps) ** 2
    # trapezoid rule with W(0) = 0
    return (w2[:, :-1].sum(axis=1) + 0.5 * w2[:, -1]) / n_steps


def _path_sup_block(rng: np.random.Generator, size: int, n_steps: int) -> np.ndarray:
    return np.abs(_paths(rng, size, n_steps)).max(axis=1)


CACHE_SIZE = 16
_cache: OrderedDict[tuple, LimitSample] = OrderedDict()
_cache_lock = threading.Lock()


def draw_law(
    law: Law = Law.INT_W2,
    n_samples: int = DEFAULTS.critval_samples,
    seed: int = DEFAULTS.seed,
    method: str = "kl",
    n_terms: int = DEFAULTS.kl_terms,
    n_steps: int = DEFAULTS.path_steps,
    block_size: int = DEFAULTS.block_size,
    workers: int = 1,
) -> LimitSample:
    """Draw n_samples values of the limit law.

    method 'kl' (int_W2 only) sums the Karhunen-Loeve series truncated at
    n_terms; method 'path' integrates (or maximizes over) Euler paths with
    n_steps steps.
    """

    law = Law(law)
    if n_samples < 1 or block_size < 1 or seed < 0:
        raise ContractError("sample count and block size must be positive and the seed non-negative")
    if law is Law.SUP_W and method != "path":
        raise ContractError("sup_W is only available by path simulation")

    if method == "kl":
        draw = partial(_kl_block, n_terms=n_terms)
    elif method == "path":
        draw = partial(_path_integral_block if law is Law.INT_W2 else _path_sup_block, n_steps=n_steps)
    else:
        raise ContractError(f"unknown simulation method {method!r}")

    sizes = [block_size] * (n_samples // block_size)
    if n_samples % block_size:
        sizes.append(n_samples % block_size)

    def run(index: int) -> np.ndarray:
        return draw(block_stream(seed, index), sizes[index])

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        blocks = list(executor.map(run, range(len(sizes))))

    draws = np.sort(np.concatenate(blocks))
    draws.setflags(write=False)
    logger.info("[VF][CRIT] simulated law=%s method=%s samples=%d seed=%d", law.value, method, n_samples, seed)
    return LimitSample(law, draws, seed, method)


def simulate_law(
    law: Law = Law.INT_W2,
    n_samples: int = DEFAULTS.critval_samples,
    seed: int = DEFAULTS.seed,
    method: str = "kl",
    n_terms: int = DEFAULTS.kl_terms,
    n_steps: int = DEFAULTS.path_steps,
    block_size: int = DEFAULTS.block_size,
    workers: int = 1,
) -> LimitSample:
    """draw_law memoized on every argument except workers."""

    key = (Law(law), int(n_samples), int(seed), method, int(n_terms), int(n_steps), int(block_size))
    with _cache_lock:
        if key in _cache:
            _cache.move_to_end(key)
            return _cache[key]

    sample = draw_law(*key, workers=workers)
    with _cache_lock:
        _cache[key] = sample
        while len(_cache) > CACHE_SIZE:
            _cache.popitem(last=False)
    return sample


def check_alphas(alphas: Sequence[float]) -> list[float]:
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ContractError("at least one level alpha is required")
    for alpha in alphas:
        if not 0.0 < alpha <= 0.5:
            raise ContractError(f"alpha must lie in (0, 0.5], got {alpha!r}")
    return alphas


def critical_values(
    alphas: Sequence[float],
    law: Law | str = Law.INT_W2,
    n_samples: int = DEFAULTS.critval_samples,
    seed: int = DEFAULTS.seed,
    n_terms: int = DEFAULTS.kl_terms,
    n_steps: int = DEFAULTS.path_steps,
    workers: int = 1,
) -> dict[float, float]:
    """1 - alpha quantiles of the limit law for each alpha."""

    alphas = check_alphas(alphas)
    law = Law(law)
    sample = limit_sample(law, n_samples, seed, n_terms, n_steps, workers)
    return {alpha: sample.quantile(alpha) for alpha in alphas}


def limit_sample(
    law: Law | str,
    n_samples: int = DEFAULTS.critval_samples,
    seed: int = DEFAULTS.seed,
    n_terms: int = DEFAULTS.kl_terms,
    n_steps: int = DEFAULTS.path_steps,
    workers: int = 1,
) -> LimitSample:
    """Cached draws with the default method of each law (KL for int_W2, paths for sup_W)."""

    law = Law(law)
    method = "kl" if law is Law.INT_W2 else "path"
    return simulate_law(law, int(n_samples), int(seed), method, int(n_terms), int(n_steps), DEFAULTS.block_size, int(workers))
