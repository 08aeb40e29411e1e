import numpy as np
import pytest

from varform.errors import ContractError
from varform.limits import Law, critical_values, draw_law, limit_sample, simulate_law

ALPHAS = [0.025, 0.05, 0.10]


def test_quantiles_decrease_in_alpha():
    values = critical_values(ALPHAS, Law.INT_W2, n_samples=20_000, seed=1, n_terms=200)
    assert values[0.025] > values[0.05] > values[0.10]


def test_int_w2_mean_is_one_half():
    sample = simulate_law(Law.INT_W2, 200_000, 7, "kl", 400)
    assert float(np.mean(sample.draws)) == pytest.approx(0.5, abs=0.005)


def test_int_w2_quantiles_match_tabulated_values():
    values = critical_values(ALPHAS, Law.INT_W2, n_samples=100_000, seed=3, n_terms=400)
    assert values[0.10] == pytest.approx(1.196, abs=0.04)
    assert values[0.05] == pytest.approx(1.656, abs=0.04)
    assert values[0.025] == pytest.approx(2.135, abs=0.06)


@pytest.mark.parametrize("alpha", [0.0, -0.1, 0.6])
def test_alpha_outside_range_rejected(alpha):
    with pytest.raises(ContractError, match="alpha"):
        critical_values([alpha], n_samples=1000, n_terms=50)


def test_empty_alpha_list_rejected():
    with pytest.raises(ContractError):
        critical_values([], n_samples=1000, n_terms=50)


def test_draws_do_not_depend_on_worker_count():
    single = draw_law(Law.INT_W2, 9_000, 5, "kl", 100, workers=1)
    pooled = draw_law(Law.INT_W2, 9_000, 5, "kl", 100, workers=3)
    assert single is not pooled
    assert np.array_equal(single.draws, pooled.draws)


def test_cache_is_shared_across_worker_counts():
    first = simulate_law(Law.INT_W2, 7_000, 12, "kl", 80, workers=1)
    assert simulate_law(Law.INT_W2, 7_000, 12, "kl", 80, workers=4) is first
    assert critical_values([0.05], n_samples=7_000, seed=12, n_terms=80, workers=2)[0.05] == first.quantile(0.05)


def test_same_seed_same_draws_and_cache_hit():
    first = limit_sample(Law.INT_W2, 5_000, 9, n_terms=100)
    second = limit_sample("int_W2", 5_000, 9, n_terms=100)
    assert first is second
    assert not first.draws.flags.writeable


def test_sup_w_requires_paths():
    with pytest.raises(ContractError, match="path"):
        simulate_law(Law.SUP_W, 1000, 1, "kl")


def test_p_value_is_share_of_draws_at_or_above():
    sample = limit_sample(Law.INT_W2, 5_000, 2, n_terms=100)
    assert sample.p_value(-1.0) == 1.0
    assert sample.p_value(1e6) == 0.0
    median = float(np.median(sample.draws))
    assert sample.p_value(median) == pytest.approx(0.5, abs=0.01)


def test_sup_w_quantile_near_reflection_value():
    # P(sup |W| > 2.2414) = 0.05; discrete paths bias the maximum downward slightly
    values = critical_values([0.05], Law.SUP_W, n_samples=20_000, seed=4, n_steps=1024)
    assert values[0.05] == pytest.approx(2.2414, abs=0.06)


@pytest.mark.slow
def test_kl_and_path_oracles_agree():
    kl = simulate_law(Law.INT_W2, 1_000_000, 20090601, "kl", 2000, workers=4)
    paths = simulate_law(Law.INT_W2, 1_000_000, 20090602, "path", n_steps=4096, workers=4)
    for alpha in ALPHAS:
        assert kl.quantile(alpha) == pytest.approx(paths.quantile(alpha), abs=0.01)
    assert float(np.mean(kl.draws)) == pytest.approx(0.5, abs=0.005)
