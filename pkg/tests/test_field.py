import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import GOLDILOCKS, naive_dft
from zkivf import field

felt = st.integers(min_value=0, max_value=GOLDILOCKS - 1)
felts = st.lists(felt, min_size=1, max_size=40)


def test_modulus_is_goldilocks():
    assert field.P == GOLDILOCKS
    assert (field.P - 1) % (1 << field.TWO_ADICITY) == 0


@given(felts, felts)
def test_vector_ops_match_python_ints(xs, ys):
    n = min(len(xs), len(ys))
    x, y = np.array(xs[:n], dtype=np.uint64), np.array(ys[:n], dtype=np.uint64)
    assert [int(v) for v in field.vmul(x, y)] == [a * b % GOLDILOCKS for a, b in zip(xs, ys)]
    assert [int(v) for v in field.vadd(x, y)] == [(a + b) % GOLDILOCKS for a, b in zip(xs, ys)]
    assert [int(v) for v in field.vsub(x, y)] == [(a - b) % GOLDILOCKS for a, b in zip(xs, ys)]


@given(felts, felt)
def test_scale_and_add_scalar(xs, c):
    x = np.array(xs, dtype=np.uint64)
    assert [int(v) for v in field.vscale(x, np.uint64(c))] == [a * c % GOLDILOCKS for a in xs]
    assert [int(v) for v in field.vadd_scalar(x, np.uint64(c))] == [(a + c) % GOLDILOCKS for a in xs]


@given(st.lists(st.integers(1, GOLDILOCKS - 1), min_size=1, max_size=30))
def test_batch_inverse(xs):
    out = field.batch_inverse(np.array(xs, dtype=np.uint64))
    assert all(int(a) * int(b) % GOLDILOCKS == 1 for a, b in zip(xs, out))


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        field.inv(0)


@pytest.mark.parametrize("log_n", [0, 1, 3, 5, 10, 32])
def test_root_of_unity_has_exact_order(log_n):
    n = 1 << log_n
    w = field.root_of_unity(n)
    assert pow(w, n, GOLDILOCKS) == 1
    if n > 1:
        assert pow(w, n // 2, GOLDILOCKS) != 1


def test_root_of_unity_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        field.root_of_unity(12)
    with pytest.raises(ValueError):
        field.root_of_unity(1 << 33)


@given(st.integers(0, 5).flatmap(lambda k: st.lists(felt, min_size=1 << k, max_size=1 << k)))
def test_ntt_matches_naive_dft_and_inverts(coeffs):
    a = np.array(coeffs, dtype=np.uint64)
    evals = field.ntt(a)
    assert [int(v) for v in evals] == naive_dft(coeffs, field.root_of_unity(len(coeffs)))
    assert [int(v) for v in field.intt(evals)] == coeffs


@given(st.lists(felt, min_size=8, max_size=8), felt)
def test_eval_coeffs_matches_horner(coeffs, x):
    expect = 0
    for c in reversed(coeffs):
        expect = (expect * x + c) % GOLDILOCKS
    assert field.eval_coeffs(np.array(coeffs, dtype=np.uint64), x) == expect
    assert field.eval_poly(coeffs, x) == expect


def test_coset_ntt_evaluates_on_shifted_domain():
    rng = np.random.default_rng(1)
    coeffs = rng.integers(0, 2**62, size=4).astype(np.uint64)
    size, shift = 16, 7
    evals = field.coset_ntt(coeffs, shift, size)
    w = field.root_of_unity(size)
    for i in (0, 3, 15):
        x = shift * pow(w, i, GOLDILOCKS) % GOLDILOCKS
        assert int(evals[i]) == field.eval_poly([int(c) for c in coeffs], x)
    back = field.coset_intt(evals, shift)
    assert [int(v) for v in back[:4]] == [int(c) for c in coeffs]
    assert not np.any(back[4:])
