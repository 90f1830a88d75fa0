"""Constraint gadgets over :class:`zkivf.plonk.circuit.Circuit`.

Gate costs (rows per call, for variable inputs):

=====================  ============================================
compress (L values)    2L - 2
set_eq (L vs L)        4L - 2
bits / range_check     2b - 1 for b bits
cmp_lt                 2t + 1
assert_le              2t - 2   (range check of y - x on t-1 bits)
cond_swap              4 per column
bubble_pass            (L-1) * (cmp_lt + 4 * columns)
lookup (L entries)     5L - 1
poseidon permutation   at most 364
=====================  ============================================

Comparisons assume inputs in ``[0, 2^(t-1))``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from . import poseidon
from .exceptions import EmptyTuple, LengthMismatch, RangeViolation, UnsatisfiedConstraint
from .field import P
from .plonk.circuit import NONE, Circuit


def compress(cs: Circuit, xs, beta: int) -> int:
    """Wire holding ``sum_i xs[i] * beta^i`` (Horner's rule)."""
    xs = list(xs)
    if not xs:
        raise EmptyTuple("compress needs at least one value")
    with cs.gadget("compress"):
        acc = xs[-1]
        for x in reversed(xs[:-1]):
            acc = cs.add(cs.mul(acc, beta), x)
    return acc


def set_eq(cs: Circuit, X, Y, alpha: int) -> None:
    """Constrain ``prod(alpha - x) == prod(alpha - y)``."""
    X, Y = list(X), list(Y)
    if len(X) != len(Y):
        raise LengthMismatch(f"{len(X)} != {len(Y)}")
    if not X:
        return
    with cs.gadget("set_eq"):
        prods = []
        for side in (X, Y):
            acc = None
            for x in side:
                term = cs.lin(alpha, 1, x, -1)
                acc = term if acc is None else cs.mul(acc, term)
            prods.append(acc)
        cs.assert_equal(prods[0], prods[1])


def _val(cs: Circuit, v: int):
    return cs.values[v]


def bits(cs: Circuit, x: int, nbits: int, name: str = "range_check") -> list[int]:
    """Little-endian bit wires whose weighted sum is copy-constrained to x."""
    val = _val(cs, x)
    if val is not None and val >> nbits:
        if cs.strict:
            raise RangeViolation(f"value does not fit in {nbits} bits")
    with cs.gadget(name):
        out = []
        for i in range(nbits):
            b = cs.witness(0 if val is None else (val >> i) & 1)
            cs.assert_bool(b)
            out.append(b)
        if nbits == 1:
            cs.assert_equal(out[0], x)
            return out
        acc = cs.lin(out[0], 1, out[1], 2)
        for i in range(2, nbits):
            acc = cs.lin(acc, 1, out[i], 1 << i)
        cs.assert_equal(acc, x)
    return out


def range_check(cs: Circuit, x: int, nbits: int) -> None:
    bits(cs, x, nbits)


def _check_cmp_inputs(cs: Circuit, t: int, *vs):
    half = 1 << (t - 1)
    for v in vs:
        val = _val(cs, v)
        if val is not None and val >= half and cs.strict:
            raise RangeViolation(f"comparison input outside [0, 2^{t - 1})")


def cmp_lt(cs: Circuit, x: int, y: int, t: int) -> int:
    """Boolean wire equal to 1 iff x < y."""
    _check_cmp_inputs(cs, t, x, y)
    with cs.gadget("cmp_lt"):
        delta = cs.lin(x, 1, y, -1, 1 << (t - 1))
        bs = bits(cs, delta, t, name="cmp_lt")
        return cs.lin(bs[-1], -1, k=1)


def assert_le(cs: Circuit, x: int, y: int, t: int) -> None:
    """Constrain x <= y by range-checking y - x on t - 1 bits."""
    _check_cmp_inputs(cs, t, x, y)
    vx, vy = _val(cs, x), _val(cs, y)
    if vx is not None and vy is not None and vx > vy and cs.strict:
        raise RangeViolation("ordering violated")
    with cs.gadget("assert_le"):
        diff = cs.sub(y, x)
        bits(cs, diff, t - 1, name="assert_le")


def cond_swap(cs: Circuit, s: int, u: int, v: int) -> tuple[int, int]:
    """(v, u) if s == 1 else (u, v); s must be boolean."""
    d = cs.sub(v, u)
    m = cs.mul(s, d)
    return cs.add(u, m), cs.sub(v, m)


def bubble_pass(cs: Circuit, keys, payloads=(), t: int = 48, descending: bool = False):
    """One left-to-right compare-exchange pass.

    Ascending passes move the largest key to the end; descending passes
    move the smallest. Equal keys are never exchanged. ``payloads`` is a
    list of columns permuted together with the keys.
    """
    keys = list(keys)
    cols = [list(c) for c in payloads]
    for c in cols:
        if len(c) != len(keys):
            raise LengthMismatch("payload column length differs from keys")
    with cs.gadget("bubble_pass"):
        for i in range(len(keys) - 1):
            if descending:
                s = cmp_lt(cs, keys[i], keys[i + 1], t)
            else:
                s = cmp_lt(cs, keys[i + 1], keys[i], t)
            with cs.gadget("permute"):
                keys[i], keys[i + 1] = cond_swap(cs, s, keys[i], keys[i + 1])
                for c in cols:
                    c[i], c[i + 1] = cond_swap(cs, s, c[i], c[i + 1])
    return keys, cols


def lookup(cs: Circuit, table, idx: int) -> int:
    """Wire equal to ``table[idx]`` via an indicator decomposition."""
    table = list(table)
    L = len(table)
    iv = _val(cs, idx)
    if iv is not None and iv >= L and cs.strict:
        raise RangeViolation(f"lookup index {iv} outside [0, {L})")
    with cs.gadget("lookup"):
        sel = []
        for j in range(L):
            s = cs.witness(1 if iv == j else 0)
            cs.assert_bool(s)
            cs.gate(a=s, b=idx, qM=1, qL=-j)  # s * (idx - j) == 0
            sel.append(s)
        total = sel[0]
        for s in sel[1:]:
            total = cs.add(total, s)
        cs.assert_const(total, 1)
        out = cs.mul(sel[0], table[0])
        for s, v in zip(sel[1:], table[1:]):
            out = cs.add(out, cs.mul(s, v))
    return out


def multiset_incl(cs: Circuit, X, Y, alpha: int, beta: int, t: int, key_of, key_value, pad):
    """Constrain the multiset of tuples X to be contained in Y.

    ``X`` and ``Y`` are lists of equal-arity tuples of wires, ``pad`` a
    tuple of wires present in neither as real data. ``key_of(cs, tup)``
    builds an order key from a tuple of wires and ``key_value(values)``
    computes the same key from plain values. Both sides are padded to
    ``L = max(|X|, |Y| + 1)`` so Y always holds a pad.
    """
    X, Y = [tuple(x) for x in X], [tuple(y) for y in Y]
    if not X:
        return
    arity = len(X[0])
    L = max(len(X), len(Y) + 1)
    Xp = X + [pad] * (L - len(X))
    Yp = Y + [pad] * (L - len(Y))

    def tup_vals(tup):
        return tuple(_val(cs, v) for v in tup)

    with cs.gadget("multiset_incl"):
        known = all(_val(cs, v) is not None for tup in Xp + Yp for v in tup)
        if known:
            xs_sorted = sorted((tup_vals(x) for x in Xp), key=key_value)
            pool = Counter(tup_vals(y) for y in Yp)
            y_sorted: list = [None] * L
            for i, xv in enumerate(xs_sorted):
                if i == 0 or xv != xs_sorted[i - 1]:
                    if pool[xv] > 0:
                        pool[xv] -= 1
                        y_sorted[i] = xv
                    elif cs.strict:
                        raise UnsatisfiedConstraint("X is not contained in Y")
            rest = list(pool.elements())
            for i in range(L):
                if y_sorted[i] is None:
                    y_sorted[i] = rest.pop() if rest else (0,) * arity
        else:
            xs_sorted = [(0,) * arity] * L
            y_sorted = [(0,) * arity] * L
        Xs = [tuple(cs.witness(v) for v in tup) for tup in xs_sorted]
        Ys = [tuple(cs.witness(v) for v in tup) for tup in y_sorted]
        cX = [compress(cs, tup, beta) for tup in Xp]
        cXs = [compress(cs, tup, beta) for tup in Xs]
        cY = [compress(cs, tup, beta) for tup in Yp]
        cYs = [compress(cs, tup, beta) for tup in Ys]
        set_eq(cs, cX, cXs, alpha)
        set_eq(cs, cY, cYs, alpha)
        keys = [key_of(cs, tup) for tup in Xs]
        for i in range(1, L):
            assert_le(cs, keys[i - 1], keys[i], t)
        cs.assert_equal(cXs[0], cYs[0])
        for i in range(1, L):
            d1 = cs.sub(cXs[i], cXs[i - 1])
            d2 = cs.sub(cXs[i], cYs[i])
            cs.gate(a=d1, b=d2, qM=1)


# ---------------------------------------------------------------------------
# Poseidon


@dataclass(frozen=True)
class Const:
    value: int


class _Form:
    """Affine combination of wires: sum(coef * var) + const."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0):
        self.terms = dict(terms or {})
        self.const = const % P

    @classmethod
    def of(cls, x):
        if isinstance(x, Const):
            return cls(const=x.value)
        return cls({x: 1})

    def scaled(self, c):
        return _Form({v: k * c % P for v, k in self.terms.items()}, self.const * c)

    def plus(self, other):
        terms = dict(self.terms)
        for v, k in other.terms.items():
            terms[v] = (terms.get(v, 0) + k) % P
        return _Form({v: k for v, k in terms.items() if k}, self.const + other.const)


def _materialize(cs: Circuit, f: _Form) -> int:
    items = sorted(f.terms.items())
    if not items:
        return cs.constant(f.const)
    if len(items) == 1 and items[0][1] == 1 and f.const == 0:
        return items[0][0]
    if len(items) == 1:
        return cs.lin(items[0][0], items[0][1], k=f.const)
    (a, ca), (b, cb) = items[0], items[1]
    acc = cs.lin(a, ca, b, cb, f.const if len(items) == 2 else 0)
    for idx, (v, c) in enumerate(items[2:]):
        last = idx == len(items) - 3
        acc = cs.lin(acc, 1, v, c, f.const if last else 0)
    return acc


def _sbox(cs: Circuit, f: _Form) -> _Form:
    """(f)^7 with the affine input folded into the first gates."""
    if not f.terms:
        return _Form(const=pow(f.const, poseidon.ALPHA, P))
    if len(f.terms) > 1:
        f = _Form.of(_materialize(cs, f))
    (x, c), = f.terms.items()
    k = f.const
    s2 = cs.arith(x, x, qM=c * c, qL=2 * c * k, qC=k * k)
    s4 = cs.mul(s2, s2)
    s3 = cs.arith(s2, x, qM=c, qL=k)
    return _Form.of(cs.mul(s4, s3))


def poseidon_permute(cs: Circuit, state: list) -> list:
    """In-circuit permutation; lanes are _Form objects."""
    half = poseidon.FULL_ROUNDS // 2
    for r in range(poseidon.N_ROUNDS):
        rc = poseidon.ROUND_CONSTANTS[r]
        lanes = [state[i].plus(_Form(const=rc[i])) for i in range(poseidon.WIDTH)]
        full = r < half or r >= half + poseidon.PARTIAL_ROUNDS
        if full:
            lanes = [_sbox(cs, f) for f in lanes]
        else:
            lanes[0] = _sbox(cs, lanes[0])
        mixed = []
        for i in range(poseidon.WIDTH):
            acc = _Form()
            for j in range(poseidon.WIDTH):
                acc = acc.plus(lanes[j].scaled(poseidon.MDS[i][j]))
            mixed.append(acc)
        # keep lanes as single wires so forms never grow across rounds
        state = [_Form.of(_materialize(cs, f)) if len(f.terms) > 1 else f for f in mixed]
    return state


def poseidon_hash(cs: Circuit, inputs, tag: int) -> int:
    """Wire equal to :func:`zkivf.poseidon.hash_fixed` of the inputs.

    Inputs are wires or :class:`Const` values.
    """
    inputs = list(inputs)
    if not inputs:
        raise EmptyTuple("hash input must be nonempty")
    with cs.gadget("poseidon"):
        iv = poseidon.initial_state(tag, len(inputs))
        state = [_Form(const=v) for v in iv]
        for start in range(0, len(inputs), poseidon.RATE):
            chunk = inputs[start : start + poseidon.RATE]
            for lane, x in enumerate(chunk, start=1):
                state[lane] = state[lane].plus(_Form.of(x))
            state = poseidon_permute(cs, state)
        return _materialize(cs, state[1])


def merkle_root(cs: Circuit, leaves) -> int:
    level = list(leaves)
    with cs.gadget("merkle_root"):
        while len(level) > 1:
            level = [poseidon_hash(cs, [level[i], level[i + 1]], poseidon.TAG_NODE)
                     for i in range(0, len(level), 2)]
    return level[0]


def merkle_open(cs: Circuit, leaf: int, index: int, path) -> int:
    """Root implied by ``leaf`` at position ``index`` (a wire) and ``path``."""
    path = list(path)
    with cs.gadget("merkle_open"):
        if not path:
            cs.assert_const(index, 0)
            return leaf
        dirs = bits(cs, index, len(path), name="merkle_open")
        cur = leaf
        for b, sib in zip(dirs, path):
            left, right = cond_swap(cs, b, cur, sib)
            cur = poseidon_hash(cs, [left, right], poseidon.TAG_NODE)
    return cur
