"""Engine-level tests: CI formulas, elimination behavior, fallback contracts."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banditkit.bandit import (
    BudgetExceeded,
    EliminationConfig,
    SampleCounter,
    adaptive_search,
    arm_matrix_evaluator,
    ci_delta_step,
    estimate_sigma,
    hoeffding_ci,
    search_rng,
    successive_elimination,
    vectorize_scalar_g,
)

# ----- hoeffding_ci -----------------------------------------------------------


def test_ci_zero_sigma_is_zero():
    assert hoeffding_ci(0.0, 10, 0.01) == 0.0


def test_ci_direct_substitution_unit():
    # sigma * sqrt(2 * log(1/delta) / pulls) with log(1/delta) = 1/2, pulls = 1
    assert hoeffding_ci(1.0, 1, math.exp(-0.5)) == pytest.approx(1.0, rel=1e-12)


def test_ci_direct_substitution_two():
    assert hoeffding_ci(2.0, 8, math.exp(-4.0)) == pytest.approx(2.0, rel=1e-12)


def test_ci_zero_pulls_uninformative():
    assert hoeffding_ci(1.0, 0, 0.1) == math.inf


def test_ci_rejects_bad_delta():
    with pytest.raises(ValueError):
        hoeffding_ci(1.0, 5, 0.0)
    with pytest.raises(ValueError):
        hoeffding_ci(1.0, 5, 1.0)


@given(
    sigma=st.floats(0.01, 100),
    delta=st.floats(1e-9, 0.5),
    pulls=st.integers(1, 10_000),
)
def test_ci_radius_nonincreasing_in_pulls(sigma, delta, pulls):
    assert hoeffding_ci(sigma, pulls + 1, delta) <= hoeffding_ci(sigma, pulls, delta)


def test_ci_policies():
    # flat passes delta through; the anytime policy spends delta/(4 n t^2),
    # reproducing the union-bound radius sigma*sqrt(2*log(4nt^2/delta)/t).
    assert ci_delta_step("flat", 0.05, 17, 9) == 0.05
    step = ci_delta_step("union_bound_anytime", 0.05, 17, 9)
    assert step == pytest.approx(0.05 / (4 * 9 * 17 * 17))
    radius = hoeffding_ci(1.0, 17, step)
    assert radius == pytest.approx(math.sqrt(2 * math.log(4 * 9 * 17 * 17 / 0.05) / 17))
    with pytest.raises(ValueError):
        ci_delta_step("bogus", 0.05, 1, 1)


# ----- estimate_sigma -----------------------------------------------------------


def test_estimate_sigma_constant_batch():
    assert estimate_sigma([5.0, 5.0, 5.0, 5.0]) == 0.0


def test_estimate_sigma_two_points():
    assert estimate_sigma([0.0, 2.0]) == pytest.approx(math.sqrt(2.0))


def test_estimate_sigma_short_batch_floors():
    assert estimate_sigma([3.0]) == 1e-12
    assert estimate_sigma([]) == 1e-12


def test_estimate_sigma_monte_carlo():
    hits = 0
    for seed in range(200):
        draws = np.random.default_rng(seed).normal(0.0, 2.0, size=100)
        if 1.6 <= estimate_sigma(draws) <= 2.4:
            hits += 1
    assert hits >= 190  # >= 95% of seeds


# ----- successive_elimination ----------------------------------------------------


def test_single_arm_needs_no_samples():
    out = successive_elimination(1, lambda arm: 1.0)
    assert out.winner == 0
    assert out.total_pulls == 0
    assert not out.exact_fallback_used


def test_zero_arms_rejected():
    with pytest.raises(ValueError):
        successive_elimination(0, lambda arm: 0.0)


def test_deterministic_rewards_resolve_in_one_batch():
    rewards = (1.0, 0.0, 0.0)
    cfg = EliminationConfig(delta=0.05, sigma=0.0, batch_size=100)
    out = successive_elimination(3, lambda arm: rewards[arm], cfg)
    assert out.winner == 0
    assert set(out.eliminated_at) == {1, 2}
    assert all(p == 100 for p in out.eliminated_at.values())


def test_bernoulli_guarantee():
    # 5 arms, best mean 0.9 vs 0.5; delta=0.05 allows <= 5% misidentification
    means = (0.9, 0.5, 0.5, 0.5, 0.5)
    cfg = EliminationConfig(delta=0.05, batch_size=100)
    wins = 0
    for rep in range(200):
        rng = np.random.default_rng(rep)
        out = successive_elimination(5, lambda arm: float(rng.random() < means[arm]), cfg)
        wins += out.winner == 0
    assert wins >= 190


def test_minimize_flag_flips_direction():
    rewards = (3.0, 1.0, 2.0)
    cfg = EliminationConfig(sigma=0.0, batch_size=10)
    assert successive_elimination(3, lambda a: rewards[a], cfg, minimize=True).winner == 1
    assert successive_elimination(3, lambda a: rewards[a], cfg, minimize=False).winner == 0


# ----- adaptive_search -----------------------------------------------------------


def test_single_target_shortcut():
    out = adaptive_search([7], 100, vectorize_scalar_g(lambda t, j: 1.0))
    assert out.winner == 7
    assert out.total_pulls == 0


def test_constant_targets_separate_in_first_batch():
    values = {0: 3.0, 1: 1.0, 2: 2.0, 3: 5.0}
    g = vectorize_scalar_g(lambda t, j: values[t])
    out = adaptive_search(4, 50, g, EliminationConfig(sigma=0.0, batch_size=5), minimize=True)
    assert out.winner == 1
    assert not out.exact_fallback_used


def test_empty_target_set_rejected():
    with pytest.raises(ValueError):
        adaptive_search([], 10, vectorize_scalar_g(lambda t, j: 0.0))


def test_gaussian_means_match_brute_force():
    # 50 targets with exact means spread over [0,1]; the oracle averages the
    # full materialized reward table, which is what the fallback converges to.
    n, ref = 50, 10_000
    mu = np.linspace(0.0, 1.0, n)
    hits = 0
    for seed in range(100):
        table = np.random.default_rng(seed).normal(mu[:, None], 1.0, size=(n, ref))

        @arm_matrix_evaluator
        def g(arm_ids, refs, _table=table):
            return _table[np.ix_(arm_ids, refs)]

        cfg = EliminationConfig(delta=0.001, batch_size=100)
        out = adaptive_search(n, ref, g, cfg, minimize=True, seed=seed)
        hits += out.winner == int(np.argmin(table.mean(axis=1)))
    assert hits >= 99


def test_matrix_and_scalar_paths_agree():
    table = np.random.default_rng(3).normal(size=(6, 500))

    @arm_matrix_evaluator
    def g_mat(arm_ids, refs):
        return table[np.ix_(arm_ids, refs)]

    def g_scalar(t, refs):
        return table[t, refs]

    cfg = EliminationConfig(delta=0.01, batch_size=25)
    a = adaptive_search(6, 500, g_mat, cfg, seed=11)
    b = adaptive_search(6, 500, g_scalar, cfg, seed=11)
    assert a.winner == b.winner
    assert a.total_pulls == b.total_pulls
    assert a.eliminated_at == b.eliminated_at


def test_exact_fallback_matches_brute_force_with_ties():
    # delta so small that nothing is ever eliminated: the search must fall
    # back to exact means and break the deliberate tie toward the lowest id.
    table = np.random.default_rng(5).normal(size=(8, 64))
    table[3] = table[6]  # exact duplicate arms
    target = table.mean(axis=1).copy()
    table[3] += (target.min() - 1.0) - table[3].mean()  # force tied winners 3 and 6
    table[6] = table[3]

    @arm_matrix_evaluator
    def g(arm_ids, refs):
        return table[np.ix_(arm_ids, refs)]

    cfg = EliminationConfig(delta=1e-300, batch_size=16)
    out = adaptive_search(8, 64, g, cfg, minimize=True, seed=1)
    assert out.exact_fallback_used
    assert out.winner == 3
    stats = out.arm_stats[3]
    assert stats.mean_estimate == pytest.approx(table[3].mean())
    assert stats.ci_radius == 0.0


def test_without_replacement_full_pass_is_exact():
    table = np.random.default_rng(9).normal(size=(5, 40))

    @arm_matrix_evaluator
    def g(arm_ids, refs):
        return table[np.ix_(arm_ids, refs)]

    cfg = EliminationConfig(delta=1e-300, batch_size=8, sampling="without_replacement")
    out = adaptive_search(5, 40, g, cfg, minimize=True, seed=2)
    assert out.exact_fallback_used
    assert out.winner == int(np.argmin(table.mean(axis=1)))
    # the single pass already visited each reference once: 40 pulls per arm
    assert all(s.pulls == 40 for s in out.arm_stats.values())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 12), ref=st.integers(4, 60))
def test_budget_ceiling_and_consistency(seed, n, ref):
    """Criterion-style property sweep: pulls per target never pass 2*ref."""
    table = np.random.default_rng(seed).normal(size=(n, ref))

    @arm_matrix_evaluator
    def g(arm_ids, refs):
        return table[np.ix_(arm_ids, refs)]

    cfg = EliminationConfig(delta=0.2, batch_size=7)
    out = adaptive_search(n, ref, g, cfg, minimize=True, seed=seed)
    assert out.winner not in out.eliminated_at
    assert out.total_pulls == sum(s.pulls for s in out.arm_stats.values())
    for stats in out.arm_stats.values():
        assert stats.pulls <= 2 * ref
    for arm, pulls in out.eliminated_at.items():
        assert pulls <= 2 * ref
        assert out.arm_stats[arm].pulls >= 0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(1e-3, 1e3))
def test_scale_equivariance(seed, scale):
    """Scaling rewards and sigma together must not change any decision."""
    table = np.random.default_rng(seed).normal(size=(6, 80))

    def out_for(c):
        @arm_matrix_evaluator
        def g(arm_ids, refs):
            return c * table[np.ix_(arm_ids, refs)]

        cfg = EliminationConfig(delta=0.05, batch_size=10)  # sigma re-estimated per arm
        return adaptive_search(6, 80, g, cfg, minimize=True, seed=seed)

    a, b = out_for(1.0), out_for(scale)
    assert a.winner == b.winner
    assert a.eliminated_at == b.eliminated_at
    assert a.total_pulls == b.total_pulls


def test_search_rng_streams_are_keyed():
    a = search_rng(1, 0).integers(0, 1 << 30, size=4)
    b = search_rng(1, 0).integers(0, 1 << 30, size=4)
    c = search_rng(1, 1).integers(0, 1 << 30, size=4)
    d = search_rng(2, 0).integers(0, 1 << 30, size=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


# ----- SampleCounter --------------------------------------------------------------


def test_counter_budget_enforced():
    c = SampleCounter(budget=10)
    c.add(7)
    assert c.remaining == 3
    assert c.would_exceed(4)
    with pytest.raises(BudgetExceeded):
        c.add(4)
    assert c.count == 7  # failed add leaves the tally untouched
    c.add(3)
    assert c.count == 10


def test_counter_rejects_negative():
    with pytest.raises(ValueError):
        SampleCounter().add(-1)


# ----- config validation -----------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        {"delta": 0.0},
        {"delta": 1.0},
        {"batch_size": 0},
        {"ci_policy": "sometimes"},
        {"sampling": "psychic"},
        {"sigma": -1.0},
        {"max_pulls_per_arm": 0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        EliminationConfig(**kwargs)
