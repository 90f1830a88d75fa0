import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from zkivf import gadgets as G
from zkivf.exceptions import EmptyTuple, LengthMismatch, RangeViolation, UnsatisfiedConstraint
from zkivf.plonk.circuit import Circuit

from helpers import satisfied

T = 16
small = st.integers(0, (1 << (T - 1)) - 1)


def fresh(strict=True):
    cs = Circuit()
    cs.strict = strict
    return cs


def gates_of(fn, cs):
    before = cs.num_gates
    out = fn()
    return cs.num_gates - before, out


# -- costs -----------------------------------------------------------------


@pytest.mark.parametrize("L", range(1, 65))
def test_compress_and_set_eq_costs(L):
    cs = fresh()
    beta, alpha = cs.challenge("beta"), cs.challenge("alpha")
    xs = [cs.witness(i) for i in range(L)]
    g, _ = gates_of(lambda: G.compress(cs, xs, beta), cs)
    assert g == oracles.compress_gates(L) == 2 * L - 2
    ys = [cs.witness(L - 1 - i) for i in range(L)]
    g, _ = gates_of(lambda: G.set_eq(cs, xs, ys, alpha), cs)
    assert g == oracles.set_eq_gates(L) == 4 * L - 2


@pytest.mark.parametrize("b", [1, 2, 7, 16, 47])
def test_bits_cost(b):
    cs = fresh()
    x = cs.witness(1)
    g, _ = gates_of(lambda: G.bits(cs, x, b), cs)
    assert g == oracles.bits_gates(b) == 2 * b - 1


@pytest.mark.parametrize("t", [4, 16, 48])
def test_comparator_costs(t):
    cs = fresh()
    x, y = cs.witness(1), cs.witness(2)
    g, _ = gates_of(lambda: G.cmp_lt(cs, x, y, t), cs)
    assert g == oracles.cmp_lt_gates(t) == 2 * t + 1
    g, _ = gates_of(lambda: G.assert_le(cs, x, y, t), cs)
    assert g == oracles.assert_le_gates(t) == 2 * t - 2


@pytest.mark.parametrize("L", [1, 2, 5, 16])
def test_lookup_cost(L):
    cs = fresh()
    table = [cs.witness(3 * j) for j in range(L)]
    idx = cs.witness(L - 1)
    g, out = gates_of(lambda: G.lookup(cs, table, idx), cs)
    assert g == oracles.lookup_gates(L) == 5 * L - 1
    assert cs.value(out) == 3 * (L - 1)


def test_cond_swap_cost():
    cs = fresh()
    s, u, v = cs.witness(1), cs.witness(5), cs.witness(9)
    g, (a, b) = gates_of(lambda: G.cond_swap(cs, s, u, v), cs)
    assert g == 4 and (cs.value(a), cs.value(b)) == (9, 5)


# -- functional behaviour ---------------------------------------------------


@given(small, small)
def test_cmp_lt_is_less_than(x, y):
    cs = fresh()
    out = G.cmp_lt(cs, cs.witness(x), cs.witness(y), T)
    assert cs.value(out) == int(x < y)
    cs.check()


@given(small, small)
def test_assert_le_accepts_exactly_ordered_pairs(x, y):
    cs = fresh(strict=False)
    G.assert_le(cs, cs.witness(x), cs.witness(y), T)
    assert cs.is_satisfied() == (x <= y)


def test_assert_le_strict_raises():
    cs = fresh()
    with pytest.raises(RangeViolation):
        G.assert_le(cs, cs.witness(5), cs.witness(4), T)
    with pytest.raises(RangeViolation):
        G.assert_le(cs, cs.witness(1 << (T - 1)), cs.witness(1 << (T - 1)), T)


def test_bits_rejects_oversized_value():
    cs = fresh()
    with pytest.raises(RangeViolation):
        G.range_check(cs, cs.witness(16), 4)
    cs = fresh(strict=False)
    G.range_check(cs, cs.witness(16), 4)
    assert not cs.is_satisfied()


@given(st.lists(small, min_size=1, max_size=10), st.data())
def test_bubble_pass_moves_extreme_to_end(keys, data):
    descending = data.draw(st.booleans())
    cs = fresh()
    kw = [cs.witness(k) for k in keys]
    pay = [cs.witness(100 + i) for i in range(len(keys))]
    out, (cols,) = G.bubble_pass(cs, kw, [pay], T, descending=descending)
    vals = [cs.value(w) for w in out]
    assert sorted(vals) == sorted(keys)
    assert vals[-1] == (min(keys) if descending else max(keys))
    # payloads travel with their keys
    assert sorted(zip(vals, (cs.value(w) - 100 for w in cols))) == sorted(
        (k, i) for i, k in enumerate(keys))
    cs.check()


def test_bubble_pass_never_swaps_equal_keys():
    cs = fresh()
    kw = [cs.witness(3), cs.witness(3)]
    pay = [cs.witness(0), cs.witness(1)]
    _, (cols,) = G.bubble_pass(cs, kw, [pay], T)
    assert [cs.value(w) for w in cols] == [0, 1]


@given(st.lists(small, min_size=1, max_size=12))
def test_set_eq_completeness_on_permutations(xs):
    cs = fresh()
    alpha = cs.challenge("alpha")
    perm = xs[:]
    random.Random(len(xs)).shuffle(perm)
    G.set_eq(cs, [cs.witness(x) for x in xs], [cs.witness(x) for x in perm], alpha)
    assert satisfied(cs)


@given(st.lists(small, min_size=1, max_size=12), st.integers(0, 11), st.integers(1, 100))
def test_set_eq_rejects_changed_multiset(xs, pos, delta):
    cs = fresh()
    alpha = cs.challenge("alpha")
    ys = xs[:]
    ys[pos % len(ys)] += delta
    G.set_eq(cs, [cs.witness(x) for x in xs], [cs.witness(y) for y in ys], alpha)
    assert not satisfied(cs, seed=delta)


def test_set_eq_and_compress_reject_bad_inputs():
    cs = fresh()
    with pytest.raises(LengthMismatch):
        G.set_eq(cs, [cs.witness(1)], [], cs.challenge("alpha"))
    with pytest.raises(EmptyTuple):
        G.compress(cs, [], cs.challenge("beta"))


@given(st.lists(small, min_size=1, max_size=8), st.integers(0, 7))
def test_lookup_returns_entry(table, idx):
    idx %= len(table)
    cs = fresh()
    out = G.lookup(cs, [cs.witness(v) for v in table], cs.witness(idx))
    assert cs.value(out) == table[idx]
    cs.check()


def test_lookup_out_of_range():
    cs = fresh()
    with pytest.raises(RangeViolation):
        G.lookup(cs, [cs.witness(1)], cs.witness(1))
    cs = fresh(strict=False)
    G.lookup(cs, [cs.witness(1), cs.witness(2)], cs.witness(2))
    assert not cs.is_satisfied()


# -- multiset inclusion ------------------------------------------------------


def _incl(xs, ys, strict=True):
    cs = fresh(strict)
    alpha, beta = cs.challenge("alpha"), cs.challenge("beta")
    X = [tuple(cs.witness(v) for v in tup) for tup in xs]
    Y = [tuple(cs.witness(v) for v in tup) for tup in ys]
    pad = (cs.witness(99), cs.witness(0))

    def key_of(cs_, tup):
        return cs_.lin(tup[0], 64, tup[1], 1)

    G.multiset_incl(cs, X, Y, alpha, beta, T, key_of, lambda v: v[0] * 64 + v[1], pad)
    return cs


table = st.lists(st.tuples(st.integers(0, 20), st.integers(0, 63)), min_size=1, max_size=6,
                 unique=True)


@given(table, st.data())
def test_multiset_inclusion_completeness(ys, data):
    xs = data.draw(st.lists(st.sampled_from(ys), min_size=1, max_size=10))
    assert satisfied(_incl(xs, ys))


@given(table, st.tuples(st.integers(21, 40), st.integers(0, 63)))
def test_multiset_inclusion_soundness(ys, outsider):
    xs = [ys[0], outsider]
    with pytest.raises(UnsatisfiedConstraint):
        _incl(xs, ys)
    assert not satisfied(_incl(xs, ys, strict=False))
