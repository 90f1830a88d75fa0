import math

import numpy as np
import pytest

from zkivf import bench
from zkivf.shaping import gaussian_mixture


def test_mean_ci_by_hand():
    m, h = bench.mean_ci([1.0, 2.0, 3.0, 4.0])
    # t(0.975, 3) = 3.182446, s = 1.290994
    assert m == 2.5 and h == pytest.approx(3.182446 * 1.290994 / 2, rel=1e-5)
    assert bench.mean_ci([7.0]) == (7.0, 0.0)
    assert all(math.isnan(x) for x in bench.mean_ci([]))


def test_ranking_metrics_by_hand():
    retrieved = np.array([[3, 1, 2], [5, 6, 7]])
    truth = np.array([[1, 2, 3], [8, 9, 4]])
    m = bench.ranking_metrics(retrieved, truth, k=3)
    assert m["Recall@3"] == pytest.approx(0.5)
    assert m["Hit@3"] == pytest.approx(0.5)
    assert m["MRR@3"] == pytest.approx(0.25)
    assert m["NDCG@3"] == pytest.approx(0.5 / math.log2(3))


def test_exact_knn_brute_force():
    rng = np.random.default_rng(0)
    X, Q = rng.normal(size=(30, 3)), rng.normal(size=(4, 3))
    nn = bench.exact_knn(X, Q, 5)
    for q, row in zip(Q, nn):
        d = ((X - q) ** 2).sum(axis=1)
        assert list(row) == list(np.argsort(d, kind="stable")[:5])


def test_float_reference_finds_stored_vectors():
    X, _ = gaussian_mixture(400, 8, 8, 1)
    ref = bench.FloatIVFPQ(8, 8, 4, 16, seed=0).fit(X.astype(float))
    hits = [ref.search(X[i], 10)[0] == i or i in ref.search(X[i], 10) for i in range(20)]
    assert np.mean(hits) > 0.8


def test_bench_row_format():
    row = bench.BenchRow("multiset", (1.0, 0.1), (0.01, 0.001), (150.0, 0.0), (0.5, 0.0), 3000, 4096)
    cells = row.cells()
    assert len(cells) == len(bench.BENCH_COLUMNS) == 6
    assert cells[-1] == "4096 (2^12)"


def test_small_utility_comparison_runs():
    res = bench.utility_comparison(n_points=600, D=8, n_list=8, n_probe=4, M=4, K=8, k=5,
                                   n_queries=20, n_components=8)
    assert set(res["std"]) == {"Recall@5", "Hit@5", "MRR@5", "NDCG@5"}
    assert 0 <= res["recall_delta"] <= 1
