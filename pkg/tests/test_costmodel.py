import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from zkivf import costmodel as cm
from zkivf.exceptions import InfeasibleBudgets, NonIntegralDerivedParam
from zkivf.shaping import IvfPqConfig


@given(st.integers(1, 2**40))
def test_bin_is_smallest_enclosing_power_of_two(G):
    b = cm.bin(G)
    assert b >= G and b & (b - 1) == 0 and (b == 1 or b // 2 < G)


def test_budget_derivation():
    b = cm.Budgets(N=1024, B=16, r=1 / 16, k=10)
    assert b.N_sel == 64
    assert b.derive(32, 16) == (2, 32, 4)
    assert b.derive(16, 2) == (1, 64, 16)
    for nl, K in [(8, 16), (32, 8), (32, 1), (3, 4)]:
        with pytest.raises(NonIntegralDerivedParam):
            b.derive(nl, K)


def test_features_follow_the_term_table():
    s = cm.Shape(D=8, n_list=16, n_probe=2, n=32, M=4, K=16, k=5, t_cmp=40)
    m = cm.features(s, "multiset")
    b = cm.features(s, "baseline")
    assert m["probe_select"] == 16 * 40 and b["probe_select"] == 2 * 16 * 40
    assert m["candidate_dist"] == 40 * 2 * 4 * 32 and b["candidate_dist"] == 2 * 32 * 4 * 16
    assert m["topk"] == 2 * 32 * 40 and b["topk"] == 5 * 2 * 32 * 40
    assert m["bind_open"] == 2 * (8 + 2 + 2 * 4)
    with pytest.raises(ValueError):
        cm.features(s, "other")


def test_fit_recovers_planted_constants():
    rng = random.Random(0)
    planted = {name: rng.uniform(0.5, 5) for name in cm.TERMS}
    planted.update({name: rng.uniform(100, 200) for name in cm.BIND_TERMS})
    samples = []
    for cfg, t in cm.CALIBRATION_SHAPES:
        shape = cm.Shape.of(cfg, t)
        f = cm.features(shape, "multiset")
        steps = {cm.STEP_OF[n]: planted[n] * f[n] for n in cm.STEP_OF}
        steps["binding"] = sum(planted[n] * f[n] for n in cm.BIND_TERMS)
        samples.append((shape, "multiset", steps))
    fitted = cm.fit_constants(samples)["multiset"]
    for name in cm.TERMS:
        assert fitted[name] == pytest.approx(planted[name], rel=1e-6)


def test_fit_needs_enough_samples():
    with pytest.raises(ValueError):
        cm.fit_constants([(cm.Shape.of(*cm.CALIBRATION_SHAPES[0]), "multiset", {})])


@pytest.mark.parametrize("variant", cm.VARIANTS)
def test_model_tracks_an_unseen_real_circuit(variant):
    cfg = IvfPqConfig(N0=64, D=8, n_list=8, n_probe=2, n=8, M=4, K=8, k=3)
    measured = cm.measure(cfg, variant, 44).G
    est = cm.estimate(cm.Shape.of(cfg, 44), variant, cm.DEFAULT_CONSTANTS).G
    assert abs(est - measured) / measured < 0.1


@given(st.integers(0, 2**32))
def test_pruned_search_equals_exhaustive_on_monotone_estimators(seed):
    rng = random.Random(seed)
    N, r, B = 4096, 1 / 64, 12
    Ks = rng.sample([2, 4, 8, 16, 64], rng.randint(1, 5))
    n_lists = [64 * 2**i for i in range(6)]
    grid = oracles.random_monotone_grid(rng, n_lists, sorted(Ks))
    est = lambda nl, K: grid[(nl, K)]  # noqa: E731
    p = cm.pruned_search(N, B, r, n_lists[-1], Ks, est)
    e = cm.exhaustive_search(N, B, r, n_lists[-1], Ks, est)
    best, (nl, K) = oracles.brute_force_tune(grid)
    assert (p.G_B_star, p.n_list_star, p.K_star) == (e.G_B_star, e.n_list_star, e.K_star)
    assert (e.G_B_star, e.n_list_star, e.K_star) == (best, nl, K)
    assert len(p.grid) <= len(e.grid)


def test_search_input_checks():
    est = lambda nl, K: 100.0  # noqa: E731
    with pytest.raises(InfeasibleBudgets):
        cm.pruned_search(1000, 16, 0.0001, 64, [4], est)
    with pytest.raises(InfeasibleBudgets):
        cm.pruned_search(1024, 16, 1 / 16, 64, [8], est)
    with pytest.raises(InfeasibleBudgets):
        cm.pruned_search(1024, 16, 1 / 16, 8, [4], est)


def test_model_estimator_search_runs_and_csv():
    budgets = cm.Budgets(N=2**14, B=16, r=1 / 64, k=10)
    est = cm.model_estimator(16, budgets, "multiset")
    res = cm.pruned_search(budgets.N, budgets.B, budgets.r, 1024, [2, 4, 16, 256], est)
    assert res.G_B_star == min(GB for *_, GB in res.grid)
    assert res.table().splitlines()[0] == "n_list,K,G,G_B"
    text = cm.grid_csv(16, budgets, [64, 128], [4, 16, 8], "multiset")
    lines = text.strip().splitlines()
    assert lines[0].startswith("n_list,K,n_probe,n,M,G,G_B")
    assert len(lines) == 1 + 4  # K=8 does not divide B=16 bits


def test_proving_time_fit():
    G_B = [2**i for i in range(10, 16)]
    secs = [3e-7 * g * math.log2(g) + 0.2 for g in G_B]
    a, b, r = cm.fit_proving_time(G_B, secs)
    assert a == pytest.approx(3e-7) and b == pytest.approx(0.2) and r == pytest.approx(1.0)


@pytest.mark.parametrize("values,expected", [
    ([5, 3, 3, 4, 9], True), ([1, 2, 3], True), ([3, 2, 1], True), ([4, 4, 4], True),
    ([3, 1, 2, 0, 5], False), ([2, 1, 1, 2, 1, 3], False),
])
def test_unimodality(values, expected):
    assert cm.is_discretely_unimodal(values) is expected
