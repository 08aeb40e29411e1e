"""Martingale-transform test for the parametric form of a variance function."""

from varform.pipeline import execute_test, run_test
from varform.schemas import TestConfig, TestReport

__all__ = ["TestConfig", "TestReport", "execute_test", "run_test"]
