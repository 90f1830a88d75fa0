import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import snapshot_lists, straight_line_query
from zkivf.exceptions import DimensionMismatch, DmaxTooSmall, InvalidConfig, RangeOverflow
from zkivf.fixedpoint import FieldSpec
from zkivf.semantics import (
    max_valid_distance,
    run_query,
    step1_centroid_distances,
    step2_probe_select,
    step3_adc_tables,
    step4_candidate_distances,
    step5_topk,
)

from helpers import random_query, random_snapshot

shapes = st.fixed_dictionaries({
    "n_list": st.sampled_from([1, 2, 4, 8]),
    "n": st.sampled_from([1, 2, 4, 8]),
    "M": st.sampled_from([1, 2, 4]),
    "K": st.sampled_from([1, 2, 4]),
    "bits": st.integers(1, 6),
    "seed": st.integers(0, 2**31),
})


def _instance(p, draw_k):
    rng = np.random.default_rng(p["seed"])
    D = p["M"] * int(rng.integers(1, 3))
    n_probe = int(rng.integers(1, p["n_list"] + 1))
    k = draw_k(n_probe * p["n"])
    s = random_snapshot(rng, n_list=p["n_list"], n=p["n"], D=D, M=p["M"], K=p["K"], k=k,
                        n_probe=n_probe, bits=p["bits"], signed=bool(rng.integers(2)))
    return s, random_query(rng, s)


@given(shapes, st.data())
def test_matches_straight_line_oracle(p, data):
    s, q = _instance(p, lambda hi: data.draw(st.integers(1, hi)))
    res = run_query(q, s)
    items, dists = straight_line_query([int(x) for x in q], **snapshot_lists(s))
    assert res.item_list == items
    assert [int(d) for d in res.distances] == dists


@given(shapes)
def test_result_is_sorted_and_sized(p):
    s, q = _instance(p, lambda hi: hi)
    res = run_query(q, s)
    assert len(res.items) == s.config.k
    assert np.all(np.diff(res.distances) >= 0)
    order = res.trace.order
    assert sorted(order.tolist()) == list(range(s.config.n_sel))


@given(shapes)
def test_padding_only_after_all_valid_candidates(p):
    s, q = _instance(p, lambda hi: hi)
    res = run_query(q, s)
    cands = res.trace.candidates
    valid = int(cands.flags.sum())
    assert np.all(res.items[:valid] != 0)
    assert np.all(res.distances[valid:] == s.field.d_max)
    assert np.all(res.distances[:valid] <= max_valid_distance(s))


def test_probe_ties_go_to_smaller_index():
    ps = step2_probe_select([5, 3, 3, 9], 2)
    assert ps.indices.tolist() == [1, 2]
    assert ps.sorted_pairs.tolist() == [[1, 3], [2, 3], [0, 5], [3, 9]]


def test_topk_ties_go_to_earlier_candidate():
    from zkivf.semantics import CandidateList

    cl = CandidateList(items=np.array([10, 11, 12], dtype=np.uint64),
                       distances=np.array([4, 2, 2]), provenance=np.zeros((3, 2)),
                       selected=np.zeros((3, 1)), flags=np.ones(3))
    items, dists, _ = step5_topk(cl, 2)
    assert items.tolist() == [11, 12] and dists.tolist() == [2, 2]


def test_adc_table_equals_blockwise_distance():
    rng = np.random.default_rng(3)
    s = random_snapshot(rng, D=4, M=2, K=4, bits=5)
    q = random_query(rng, s)
    probes = step2_probe_select(step1_centroid_distances(q, s), s.config.n_probe)
    tables = step3_adc_tables(q, s, probes)
    rho = s.scale.residual_offset
    for p, i in enumerate(probes.indices):
        r = q - s.centroids[i] + rho
        for m in range(2):
            for kk in range(4):
                expect = int(((s.codebooks[m, kk] - r[2 * m:2 * m + 2]) ** 2).sum())
                assert tables.lut[p, m, kk] == expect


def test_input_errors():
    rng = np.random.default_rng(0)
    s = random_snapshot(rng, bits=3)
    with pytest.raises(DimensionMismatch):
        run_query(np.zeros(3, dtype=np.int64), s)
    with pytest.raises(RangeOverflow):
        run_query(np.full(4, s.scale.coord_max + 1), s)
    with pytest.raises(InvalidConfig):
        step2_probe_select([1, 2], 3)
    probes = step2_probe_select(step1_centroid_distances(np.zeros(4, dtype=np.int64), s), 2)
    tables = step3_adc_tables(np.zeros(4, dtype=np.int64), s, probes)
    with pytest.raises(DmaxTooSmall):
        step4_candidate_distances(s, probes, tables, d_max=max_valid_distance(s))
    assert FieldSpec().d_max > max_valid_distance(s)
