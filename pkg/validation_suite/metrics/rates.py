"""Acceptance checks on simulated rejection rates."""

from __future__ import annotations

import math


def mc_standard_error(proportion: float, replications: int) -> float:
    """Binomial standard error of a Monte Carlo rejection proportion."""

    if replications <= 0:
        return 0.0
    p = min(max(float(proportion), 0.0), 1.0)
    return math.sqrt(p * (1.0 - p) / replications)


def check_level(proportion: float, reference: float, replications: int, allowance: float) -> dict[str, float | bool]:
    """Proportion under the null must sit within reference +- (2 s.e. + allowance)."""

    band = 2.0 * mc_standard_error(reference, replications) + allowance
    return {
        "deviation": abs(proportion - reference),
        "band": band,
        "passed": abs(proportion - reference) <= band,
    }


def check_power(proportion: float, reference: float, tolerance: float) -> dict[str, float | bool]:
    return {
        "deviation": abs(proportion - reference),
        "band": tolerance,
        "passed": abs(proportion - reference) <= tolerance,
    }


def check_monotone(proportions: list[float], std_errors: list[float], slack_se: float) -> bool:
    """Rates ordered by increasing c must not drop by more than slack_se combined standard errors."""

    for k in range(1, len(proportions)):
        slack = slack_se * math.hypot(std_errors[k - 1], std_errors[k])
        if proportions[k] < proportions[k - 1] - slack:
            return False
    return True
