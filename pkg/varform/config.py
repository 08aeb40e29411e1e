"""Defaults for the variance-form test and its simulation harness."""

from __future__ import annotations

import os
from dataclasses import dataclass

from dotenv import load_dotenv

from .errors import UsageError

SEED_ENV_VAR = "VARFORM_SEED"


@dataclass(frozen=True)
class Defaults:
    """Numeric defaults shared by the library, CLI and validation runner."""

    order: int = 1
    kernel: str = "epanechnikov"
    method: str = "local_linear"
    t0: float = 0.9
    alphas: tuple[float, ...] = (0.025, 0.05, 0.10)
    cv_grid_size: int = 40
    cv_max_bandwidth: float = 0.5
    beta_method: str = "nw"
    beta_bandwidth_factor: float = 1.0
    beta_min_points: int = 10
    studentize: bool = True
    beta_floor_factor: float = 1e-3
    beta_floor_fallback: float = 1e-12
    max_condition: float = 1e10
    critval_samples: int = 1_000_000
    kl_terms: int = 2000
    path_steps: int = 4096
    block_size: int = 2000
    seed: int = 20090601
    max_failure_rate: float = 0.01


DEFAULTS = Defaults()


def resolve_seed(explicit: int | None = None, from_file: int | None = None) -> int:
    """Pick the seed: flag, then config file, then VARFORM_SEED (.env honoured), then default."""

    if explicit is not None:
        return int(explicit)
    if from_file is not None:
        return int(from_file)

    load_dotenv()
    raw = os.getenv(SEED_ENV_VAR)
    if raw is not None and raw.strip():
        try:
            return int(raw.strip())
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc
    return DEFAULTS.seed
