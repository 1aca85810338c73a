"""Inner-product search: exact baseline, adaptive solvers, top-k, batching."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banditkit.data import gen_correlated_normal_custom, gen_normal_custom
from banditkit.mips.core import (
    MipsInstance,
    banditmips,
    banditmips_alpha,
    bucket_ae,
    naive_mips,
    topk_mips,
    warm_start_batch,
)

from oracles import transposed_naive_mips


def _toy(n=6, d=32):
    """Query of ones; atom 0 is all ones, the rest all zeros (gap 1)."""
    atoms = np.zeros((n, d))
    atoms[0] = 1.0
    return MipsInstance(np.ones(d), atoms, sigma=1e-12, delta=0.01)


def _normal_instance(n, d, seed, delta=0.001):
    X = gen_normal_custom(n + 1, d, seed)
    return MipsInstance(X[0], X[1:], sigma=1.0, delta=delta)


# ----- naive baseline ---------------------------------------------------------------


def test_naive_toy_gaps():
    ans = naive_mips(_toy())
    assert ans.winner == 0
    assert ans.mu_hats[0] == pytest.approx(1.0)
    assert np.allclose(ans.mu_hats[1:], 0.0)  # every other atom trails by 1
    assert ans.n_multiplications == 6 * 32


def test_naive_single_atom():
    ans = naive_mips(MipsInstance(np.ones(4), np.ones((1, 4))))
    assert ans.winner == 0


def test_naive_matches_transposed_oracle():
    rng = np.random.default_rng(0)
    q = rng.normal(size=20)
    atoms = rng.normal(size=(10, 20))
    ans = naive_mips(MipsInstance(q, atoms))
    want_winner, want_mu = transposed_naive_mips(q, atoms)
    assert ans.winner == want_winner
    assert np.max(np.abs(ans.mu_hats - want_mu)) < 1e-9
    assert ans.n_multiplications == 200


def test_naive_breaks_ties_to_lowest_index():
    atoms = np.tile(np.ones(8), (3, 1))
    assert naive_mips(MipsInstance(np.ones(8), atoms)).winner == 0


# ----- banditmips --------------------------------------------------------------------


def test_banditmips_toy_resolves_in_one_batch():
    ans = banditmips(_toy())
    assert ans.winner == 0
    assert ans.n_multiplications == 6 * 16  # one shared 16-coordinate batch
    assert not ans.exact_fallback_used


def test_banditmips_single_atom_needs_no_work():
    ans = banditmips(MipsInstance(np.ones(4), np.ones((1, 4))))
    assert ans.winner == 0
    assert ans.n_multiplications == 0


def test_banditmips_correctness_rate():
    # frequency of oracle agreement must beat 1 - delta at delta = 0.05
    hits = 0
    for seed in range(200):
        inst = _normal_instance(20, 300, seed, delta=0.05)
        hits += banditmips(inst, seed=seed).winner == naive_mips(inst).winner
    assert hits >= 190


def test_banditmips_fallback_is_exact():
    # duplicate best atoms force the search all the way to the fallback,
    # which must resolve ties deterministically to the lowest index
    rng = np.random.default_rng(1)
    atoms = rng.normal(size=(5, 64))
    atoms[3] = atoms[1]
    atoms[1] += 10.0 / 64  # make atom 1 the unique best... then copy it
    atoms[3] = atoms[1]
    inst = MipsInstance(np.ones(64), atoms, sigma=1.0, delta=1e-9)
    ans = banditmips(inst, seed=0)
    assert ans.exact_fallback_used
    assert ans.winner == 1


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 12), d=st.integers(2, 80))
def test_multiplication_ceiling(seed, n, d):
    rng = np.random.default_rng(seed)
    inst = MipsInstance(rng.normal(size=d), rng.normal(size=(n, d)), delta=0.2)
    assert banditmips(inst, seed=seed).n_multiplications <= 2 * n * d
    assert banditmips_alpha(inst).n_multiplications <= 2 * n * d
    assert topk_mips(inst, min(2, n), seed=seed).n_multiplications <= 2 * n * d


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(1e-3, 1e3))
def test_argmax_invariance_under_query_scaling(seed, scale):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=50)
    atoms = rng.normal(size=(8, 50))
    base = banditmips(MipsInstance(q, atoms, sigma=1.0, delta=0.05), seed=seed)
    scaled = banditmips(
        MipsInstance(scale * q, atoms, sigma=scale * 1.0, delta=0.05), seed=seed
    )
    assert base.winner == scaled.winner
    assert base.n_multiplications == scaled.n_multiplications


def test_sigma_defaults_from_entry_bounds():
    inst = MipsInstance(np.ones(4), np.ones((2, 4)), bounds=(0.0, 2.0))
    assert inst.resolved_sigma() == pytest.approx(1.0)  # (b^2 - a^2) / 4


def test_instance_validation():
    with pytest.raises(ValueError):
        MipsInstance(np.ones(4), np.ones((2, 5)))
    with pytest.raises(ValueError):
        MipsInstance(np.ones(4), np.ones((2, 4)), delta=0.0)
    with pytest.raises(ValueError):
        MipsInstance(np.ones(4), np.ones((2, 4)), sigma=-1.0)
    with pytest.raises(ValueError):
        MipsInstance(np.ones(4), np.ones((2, 4)), bounds=(2.0, 1.0))


def test_answer_json_contract():
    payload = banditmips(_toy()).to_json()
    assert set(payload) == {"winners", "mu_hats", "n_multiplications", "sort_cost", "fallback"}


# ----- banditmips_alpha ----------------------------------------------------------------


def test_alpha_toy_same_winner():
    assert banditmips_alpha(_toy()).winner == banditmips(_toy()).winner == 0


def test_alpha_reports_sort_cost_separately():
    inst = _toy(d=64)
    ans = banditmips_alpha(inst)
    assert ans.sort_cost == round(64 * np.log2(64))
    assert ans.n_multiplications < 2 * 6 * 64


def test_alpha_correlated_matches_oracle_and_saves_work():
    match, cheaper = 0, 0
    for seed in range(40):
        q, atoms = gen_correlated_normal_custom(50, 2000, seed)
        inst = MipsInstance(q, atoms, sigma=1.0, delta=0.001)
        alpha = banditmips_alpha(inst)
        uniform = banditmips(inst, seed=seed)
        match += alpha.winner == naive_mips(inst).winner
        cheaper += alpha.n_multiplications <= uniform.n_multiplications
    assert match >= 39
    assert cheaper >= 30  # sorted sampling wins on at least 75% of seeds


def test_alpha_adversarial_coordinate_order_stays_correct():
    # the largest |q_j| coordinates anti-correlate with the true winner, so
    # the sorted visit order starts with maximally misleading evidence
    d = 400
    q = np.ones(d)
    q[:20] = 5.0
    atoms = np.zeros((4, d))
    atoms[0, :20] = -1.0  # looks terrible on the loud coordinates
    atoms[0, 20:] = +1.0  # but dominates everywhere else
    atoms[1, :20] = +1.0
    atoms[2, :20] = +0.5
    inst = MipsInstance(q, atoms, sigma=2.0, delta=0.001)
    want = naive_mips(inst).winner
    assert want == 0
    ans = banditmips_alpha(inst)
    assert ans.winner == 0


# ----- topk ------------------------------------------------------------------------


def test_topk_all_atoms_costs_nothing():
    inst = _toy(n=5)
    ans = topk_mips(inst, 5)
    assert ans.winners == [0, 1, 2, 3, 4]
    assert ans.n_multiplications == 0


def test_topk_scaled_toy():
    d = 16
    scales = np.array([3.0, 2.0, 1.0, 0.0])
    atoms = scales[:, None] * np.ones((4, d))
    inst = MipsInstance(np.ones(d), atoms, sigma=1e-12, delta=0.01)
    assert topk_mips(inst, 2).winners == [0, 1]


def test_topk_rejects_bad_k():
    with pytest.raises(ValueError):
        topk_mips(_toy(n=4), 5)
    with pytest.raises(ValueError):
        topk_mips(_toy(n=4), 0)


def test_topk_precision_on_normal_instances():
    for k in (5, 10):
        perfect = 0
        for seed in range(100):
            inst = _normal_instance(100, 1000, seed)
            truth = set(np.argsort(-(inst.atoms @ inst.query))[:k])
            got = set(topk_mips(inst, k, seed=seed).winners)
            perfect += len(got & truth) == k
        assert perfect >= 95, k


# ----- warm_start_batch ------------------------------------------------------------


def test_warm_start_single_query_splits_cost_at_the_prefix():
    inst = _toy(n=6, d=64)
    cold = banditmips(inst)
    [warm] = warm_start_batch(
        [inst.query], inst.atoms, cache_fraction=0.25, sigma=1e-12, delta=0.01
    )
    assert warm.winner == cold.winner == 0
    n_cached = round(0.25 * 64)
    assert warm.n_multiplications - 6 * n_cached == cold.n_multiplications


def test_warm_start_deduplicates_identical_queries():
    inst = _normal_instance(30, 400, seed=0)
    answers = warm_start_batch(
        [inst.query] * 20, inst.atoms, cache_fraction=0.1, sigma=1.0, delta=0.001
    )
    winners = {a.winner for a in answers}
    assert len(winners) == 1
    assert all(a.n_multiplications == 0 for a in answers[1:])
    cold = banditmips(inst, seed=0)
    mean_fresh = sum(a.n_multiplications for a in answers) / 20
    assert mean_fresh < cold.n_multiplications


def test_warm_start_random_queries_match_oracle():
    rng = np.random.default_rng(2)
    X = gen_normal_custom(51, 500, 3)
    atoms = X[1:]
    queries = [X[0] + rng.normal(0, 0.1, 500) for _ in range(20)]
    answers = warm_start_batch(queries, atoms, cache_fraction=0.1, sigma=1.0, delta=0.001)
    for q, ans in zip(queries, answers):
        assert ans.winner == naive_mips(MipsInstance(q, atoms)).winner


def test_warm_start_validates_inputs():
    with pytest.raises(ValueError):
        warm_start_batch([], np.ones((2, 4)))
    with pytest.raises(ValueError):
        warm_start_batch([np.ones(4)], np.ones((2, 4)), cache_fraction=1.5)


# ----- bucket_ae --------------------------------------------------------------------


def test_bucket_single_bucket_matches_uniform_solver():
    for seed in range(10):
        inst = _normal_instance(25, 400, seed)
        ans = bucket_ae(inst, bucket_size=25, seed=seed)
        assert len(ans.trace["buckets"]) == 1
        assert ans.winner == naive_mips(inst).winner


def test_bucket_dominant_norm_atom_resolves_first():
    rng = np.random.default_rng(4)
    atoms = rng.normal(size=(40, 200))
    atoms[17] = 6.0  # huge norm and the clear winner
    inst = MipsInstance(np.ones(200), atoms, sigma=1.0, delta=0.001)
    ans = bucket_ae(inst, bucket_size=10, seed=0)
    assert ans.winner == 17
    assert 17 in ans.trace["buckets"][0]
    assert ans.trace["resolution_order"][0] == 0


def test_bucket_scaling_in_n_no_worse_than_uniform():
    d = 1000

    def mean_mults(solver, n):
        out = []
        for seed in range(3):
            q, atoms = gen_correlated_normal_custom(n, d, seed)
            inst = MipsInstance(q, atoms, sigma=1.0, delta=0.001)
            out.append(solver(inst).n_multiplications)
        return float(np.mean(out))

    ns = [200, 400, 800]
    bucket = [mean_mults(lambda i: bucket_ae(i, seed=0), n) for n in ns]
    uniform = [mean_mults(lambda i: banditmips(i, seed=0), n) for n in ns]
    growth_bucket = bucket[-1] / bucket[0]
    growth_uniform = uniform[-1] / uniform[0]
    assert growth_bucket <= growth_uniform * 1.05


def test_bucket_validates_bucket_size():
    with pytest.raises(ValueError):
        bucket_ae(_toy(), bucket_size=0)


def test_bucket_ceiling_with_norm_sampling():
    rng = np.random.default_rng(5)
    n, d = 30, 64
    inst = MipsInstance(rng.normal(size=d), rng.normal(size=(n, d)), delta=0.2)
    ans = bucket_ae(inst, bucket_size=7, seed=1)
    assert ans.n_multiplications <= n * (2 * d + 32)
