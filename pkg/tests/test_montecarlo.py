import numpy as np
import pytest

from varform.core import build_design, difference_sequence
from varform.errors import ContractError, InvalidScenarioError
from varform.montecarlo import (
    generate_scenario,
    rejection_rates,
    replication_seed,
    table_scenarios,
    true_beta,
    variance_is_positive,
    variance_values,
)
from varform.schemas import ScenarioConfig, TestConfig

FAST = TestConfig(critval_samples=20_000, kl_terms=200, ks_test=False)


@pytest.mark.parametrize("model", ["sin", "exp", "sqrt"])
def test_null_variance_is_quadratic(model):
    t = np.linspace(0.0, 1.0, 11)
    values = variance_values(ScenarioConfig(model=model, c=0.0, n=10), t)
    assert np.allclose(values, 0.5 + 3.0 * t**2)


def test_same_seed_same_sample():
    config = ScenarioConfig(model="sqrt", c=0.5, n=50, seed=123)
    assert np.array_equal(generate_scenario(config).responses, generate_scenario(config).responses)
    other = config.model_copy(update={"seed": 124})
    assert not np.array_equal(generate_scenario(config).responses, generate_scenario(other).responses)


def test_standardized_errors_have_unit_variance():
    config = ScenarioConfig(model="exp", c=0.0, n=100_000, seed=31)
    sample = generate_scenario(config)
    t = sample.points
    standardized = (sample.responses - 1.0 - t) / np.sqrt(variance_values(config, t))
    assert float(np.var(standardized)) == pytest.approx(1.0, abs=0.02)


def test_negative_variance_policy():
    config = ScenarioConfig(model="sin", c=1.0, n=50)
    assert not variance_is_positive(config)
    with pytest.raises(InvalidScenarioError, match="not positive"):
        generate_scenario(config)

    folded = config.model_copy(update={"negative_variance": "fold"})
    assert np.all(variance_values(folded, build_design("uniform", 50).points) >= 0.0)
    assert generate_scenario(folded).n == 50


def test_true_beta_for_normal_errors_and_order_one():
    config = ScenarioConfig(model="sqrt", c=0.5, n=20)
    grid = build_design("uniform", 20)
    beta = true_beta(config, grid, difference_sequence(1))
    assert np.allclose(beta, 3.0 * variance_values(config, grid.points) ** 2)


def test_replication_seeds_depend_on_cell_not_order():
    a = ScenarioConfig(model="sin", c=0.5, n=50)
    b = ScenarioConfig(model="sin", c=0.5, n=100)
    assert replication_seed(1, a, 0) == replication_seed(1, a, 0)
    assert replication_seed(1, a, 0) != replication_seed(1, b, 0)
    assert replication_seed(1, a, 0) != replication_seed(1, a, 1)
    assert replication_seed(2, a, 0) != replication_seed(1, a, 0)


def test_table_scenarios_order():
    scenarios = table_scenarios(["sin", "exp"], [0.0, 1.0], [50, 100])
    assert len(scenarios) == 8
    assert (scenarios[0].model, scenarios[0].c, scenarios[0].n) == ("sin", 0.0, 50)
    assert (scenarios[1].model, scenarios[1].c, scenarios[1].n) == ("sin", 0.0, 100)
    assert scenarios[-1].model == "exp"
    assert all(s.negative_variance == "fold" for s in scenarios)


def test_alpha_zero_is_rejected():
    with pytest.raises(ContractError):
        rejection_rates(table_scenarios(["sin"], [0.0], [50]), "const,t2", FAST, replications=1, alphas=[0.0])


def test_single_replication_smoke():
    table = rejection_rates(table_scenarios(["sin"], [0.0, 1.0], [50]), "const,t2", FAST, replications=1, seed=4)
    assert len(table.cells) == 2 * 3
    assert all(cell.proportion in (0.0, 1.0) for cell in table.cells)
    assert table.notes == ["bootstrap comparator columns are not computed"]


def test_table_identical_across_worker_counts():
    scenarios = table_scenarios(["exp"], [0.5], [50])
    single = rejection_rates(scenarios, "const,t2", FAST, replications=6, seed=77, workers=1)
    pooled = rejection_rates(scenarios, "const,t2", FAST, replications=6, seed=77, workers=3)
    assert single.model_dump() == pooled.model_dump()


def test_lookup_finds_cell():
    table = rejection_rates(table_scenarios(["sqrt"], [0.0], [50]), "const,t2", FAST, replications=2, seed=1)
    cell = table.lookup("sqrt", 0.0, 50, 0.05)
    assert cell.replications + cell.failures == 2
    with pytest.raises(KeyError):
        table.lookup("sqrt", 1.0, 50, 0.05)


@pytest.mark.slow
def test_null_rejection_rate_near_nominal_level():
    config = TestConfig(critval_samples=200_000, kl_terms=1000, ks_test=False)
    table = rejection_rates(table_scenarios(["sin"], [0.0], [100]), "const,t2", config, replications=1000, workers=4)
    cell = table.lookup("sin", 0.0, 100, 0.05)
    assert abs(cell.proportion - 0.042) <= 2.0 * cell.std_error + 0.015


@pytest.mark.slow
def test_power_grows_with_deviation():
    config = TestConfig(critval_samples=200_000, kl_terms=1000, ks_test=False)
    table = rejection_rates(table_scenarios(["sin"], [0.5, 1.0], [200]), "const,t2", config, replications=500, workers=4)
    assert table.lookup("sin", 1.0, 200, 0.05).proportion > table.lookup("sin", 0.5, 200, 0.05).proportion
