"""Simulation scenarios and the rejection-rate harness."""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULTS
from .core import DesignGrid, DifferenceSequence, Sample, build_design
from .errors import HarnessError, InvalidScenarioError, VarformError
from .families import VarianceFamily, resolve_family
from .limits import Law, check_alphas, critical_values
from .pipeline import run_test
from .schemas import RejectionCell, RejectionTable, ScenarioConfig, TestConfig, alpha_key

logger = logging.getLogger(__name__)

CHECK_GRID = np.linspace(0.0, 1.0, 1024)

VarianceModel = Callable[[np.ndarray, float], np.ndarray]

VARIANCE_MODELS: dict[str, VarianceModel] = {
    "sin": lambda t, c: 0.5 + 3.0 * t**2 + 2.5 * c * np.sin(2.0 * np.pi * t),
    "exp": lambda t, c: 0.5 + 3.0 * t**2 + 2.0 * c * np.exp(2.0 * t),
    "sqrt": lambda t, c: 0.5 + 3.0 * t**2 + 4.0 * c * np.sqrt(t),
}


@dataclass(frozen=True)
class ErrorLaw:
    """Centered, unit-variance error distribution with its fourth moment."""

    name: str
    m4: float
    draw: Callable[[np.random.Generator, int], np.ndarray]


ERROR_LAWS: dict[str, ErrorLaw] = {
    "normal": ErrorLaw("normal", 3.0, lambda rng, size: rng.standard_normal(size)),
    "uniform": ErrorLaw("uniform", 9.0 / 5.0, lambda rng, size: rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)),
    "laplace": ErrorLaw("laplace", 6.0, lambda rng, size: rng.laplace(0.0, 1.0 / math.sqrt(2.0), size)),
}


def scenario_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def variance_values(config: ScenarioConfig, t: np.ndarray) -> np.ndarray:
    """sigma^2 of the scenario at t, after the negative-variance policy."""

    check = VARIANCE_MODELS[config.model](CHECK_GRID, config.c)
    if np.any(check <= 0.0):
        worst = float(CHECK_GRID[np.argmin(check)])
        if config.negative_variance == "error":
            raise InvalidScenarioError(
                f"variance of model {config.model!r} with c={config.c} is not positive near t={worst:.4g}"
            )
        logger.debug("[VF][SIM] folding negative variance of model=%s c=%g (min at t=%.4g)", config.model, config.c, worst)
    values = VARIANCE_MODELS[config.model](np.asarray(t, dtype=float), config.c)
    return np.abs(values) if config.negative_variance == "fold" else values


def variance_is_positive(config: ScenarioConfig) -> bool:
    return bool(np.all(VARIANCE_MODELS[config.model](CHECK_GRID, config.c) > 0.0))


def generate_scenario(config: ScenarioConfig) -> Sample:
    """Y_i = 1 + t_i + sigma(t_i) eps_i on the uniform design t_i = i/(n+1)."""

    grid = build_design("uniform", config.n)
    t = grid.points
    sigma = np.sqrt(variance_values(config, t))
    errors = ERROR_LAWS[config.error_law].draw(scenario_stream(config.seed), config.n)
    return Sample(grid, 1.0 + t + sigma * errors)


def true_beta(config: ScenarioConfig, grid: DesignGrid, seq: DifferenceSequence) -> np.ndarray:
    """(m4 - 1 + 4 delta_r) sigma^4 at the design points."""

    m4 = ERROR_LAWS[config.error_law].m4
    return (m4 - 1.0 + 4.0 * seq.delta) * variance_values(config, grid.points) ** 2


def cell_key(config: ScenarioConfig) -> int:
    digest = hashlib.md5(f"{config.model}|{config.c!r}|{config.n}|{config.error_law}".encode("utf-8")).hexdigest()
    return int(digest[:8], 16)


def replication_seed(master_seed: int, config: ScenarioConfig, index: int) -> int:
    """64-bit seed for replication `index` of a cell, independent of sweep order."""

    words = np.random.SeedSequence([int(master_seed), cell_key(config), int(index)]).generate_state(2, np.uint32)
    return int(words[0]) << 32 | int(words[1])


def _replicate(
    scenario: ScenarioConfig,
    family: VarianceFamily,
    config: TestConfig,
    seed: int,
    index: int,
) -> dict[str, bool] | str:
    try:
        sample = generate_scenario(scenario.model_copy(update={"seed": replication_seed(seed, scenario, index)}))
        return run_test(sample, family, config).decisions
    except VarformError as exc:
        return f"{type(exc).__name__}: {exc}"


def rejection_rates(
    scenarios: Sequence[ScenarioConfig],
    family: VarianceFamily | str,
    config: TestConfig | None = None,
    replications: int = 1000,
    alphas: Sequence[float] | None = None,
    seed: int = DEFAULTS.seed,
    workers: int = 1,
) -> RejectionTable:
    """Rejection proportions of the G-test per (scenario, alpha)."""

    if replications < 1:
        raise HarnessError("at least one replication is required")
    config = config or TestConfig()
    if alphas is not None:
        config = config.model_copy(update={"alphas": check_alphas(alphas)})
    config = config.model_copy(update={"ks_test": False})
    family = resolve_family(family)

    # fill the critical-value cache before fanning out
    critical_values(config.alphas, Law.INT_W2, config.critval_samples, config.critval_seed, config.kl_terms, workers=config.workers)

    cells: list[RejectionCell] = []
    for scenario in scenarios:
        if not variance_is_positive(scenario):
            logger.warning(
                "[VF][SIM] model=%s c=%g has negative variance; policy=%s",
                scenario.model, scenario.c, scenario.negative_variance,
            )
        with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
            outcomes = list(
                executor.map(lambda k: _replicate(scenario, family, config, seed, k), range(replications))
            )

        failures = [outcome for outcome in outcomes if isinstance(outcome, str)]
        for message in failures:
            logger.warning("[VF][SIM] excluded replication model=%s c=%g n=%d: %s", scenario.model, scenario.c, scenario.n, message)
        if len(failures) > DEFAULTS.max_failure_rate * replications:
            raise HarnessError(
                f"{len(failures)} of {replications} replications failed for model={scenario.model} "
                f"c={scenario.c} n={scenario.n}; first error: {failures[0]}"
            )

        decisions = [outcome for outcome in outcomes if not isinstance(outcome, str)]
        done = len(decisions)
        for alpha in config.alphas:
            rejections = sum(1 for row in decisions if row[alpha_key(alpha)])
            proportion = rejections / done if done else 0.0
            cells.append(
                RejectionCell(
                    model=scenario.model,
                    c=scenario.c,
                    n=scenario.n,
                    alpha=alpha,
                    rejections=rejections,
                    replications=done,
                    failures=len(failures),
                    proportion=proportion,
                    std_error=math.sqrt(proportion * (1.0 - proportion) / done) if done else 0.0,
                )
            )
        logger.info("[VF][SIM] done model=%s c=%g n=%d reps=%d failures=%d", scenario.model, scenario.c, scenario.n, done, len(failures))

    return RejectionTable(
        cells=cells,
        replications=replications,
        seed=seed,
        family=family.name,
        notes=["bootstrap comparator columns are not computed"],
    )


def table_scenarios(
    models: Sequence[str],
    c_values: Sequence[float],
    sizes: Sequence[int],
    error_law: str = "normal",
    negative_variance: str = "fold",
) -> list[ScenarioConfig]:
    """Scenario grid in table order: model, then c, then n."""

    return [
        ScenarioConfig(model=model, c=c, n=n, error_law=error_law, negative_variance=negative_variance)
        for model in models
        for c in c_values
        for n in sizes
    ]
