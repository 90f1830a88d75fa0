"""Goldilocks prime field arithmetic.

Scalars are plain Python ints in ``[0, P)``. Bulk work (NTTs, pointwise
products, batch inversion) runs on ``uint64`` numpy arrays through numba
kernels that emulate the 128-bit product with 32-bit limbs.
"""

from __future__ import annotations

import numba
import numpy as np

P = 0xFFFFFFFF00000001
MODULUS_BITS = 64
TWO_ADICITY = 32
MULTIPLICATIVE_GENERATOR = 7
# 7^((P-1)/2^32): generator of the order-2^32 subgroup
ROOT_OF_UNITY_2_32 = 1753635133440165772

_P = np.uint64(P)
_EPS = np.uint64(0xFFFFFFFF)
_M32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def inv(a: int) -> int:
    if a % P == 0:
        raise ZeroDivisionError("inverse of zero in the field")
    return pow(a, P - 2, P)


def root_of_unity(n: int) -> int:
    """Primitive n-th root of unity for a power of two ``n``."""
    log_n = n.bit_length() - 1
    if n != 1 << log_n or log_n > TWO_ADICITY:
        raise ValueError(f"no root of unity of order {n}")
    return pow(ROOT_OF_UNITY_2_32, 1 << (TWO_ADICITY - log_n), P)


def to_field(x: int) -> int:
    return x % P


def as_array(values) -> np.ndarray:
    return np.asarray([v % P for v in values], dtype=np.uint64)


# ---------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True, inline="always")
def _mul(a, b):
    a_lo = a & _M32
    a_hi = a >> _S32
    b_lo = b & _M32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = lh + hl
    mid_carry = np.uint64(1) if mid < lh else np.uint64(0)
    lo = ll + (mid << _S32)
    lo_carry = np.uint64(1) if lo < ll else np.uint64(0)
    hi = hh + (mid >> _S32) + (mid_carry << _S32) + lo_carry
    # reduce hi * 2^64 + lo using 2^64 = 2^32 - 1 and 2^96 = -1 (mod P)
    hi_hi = hi >> _S32
    hi_lo = hi & _M32
    t0 = lo - hi_hi
    if lo < hi_hi:
        t0 -= _EPS
    t1 = hi_lo * _EPS
    t2 = t0 + t1
    if t2 < t1:
        t2 += _EPS
    if t2 >= _P:
        t2 -= _P
    return t2


@numba.njit(cache=True, inline="always")
def _add(a, b):
    s = a + b
    if s < a:
        s += _EPS
    if s >= _P:
        s -= _P
    return s


@numba.njit(cache=True, inline="always")
def _sub(a, b):
    if a >= b:
        return a - b
    return a + (_P - b)


@numba.njit(cache=True)
def _pow(a, e):
    result = np.uint64(1)
    base = a
    while e > 0:
        if e & 1:
            result = _mul(result, base)
        base = _mul(base, base)
        e >>= 1
    return result


@numba.njit(cache=True)
def vmul(x, y):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _mul(x[i], y[i])
    return out


@numba.njit(cache=True)
def vadd(x, y):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _add(x[i], y[i])
    return out


@numba.njit(cache=True)
def vsub(x, y):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _sub(x[i], y[i])
    return out


@numba.njit(cache=True)
def vscale(x, c):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _mul(x[i], c)
    return out


@numba.njit(cache=True)
def vaxpy(acc, c, x):
    """In place ``acc += c * x``."""
    for i in range(x.shape[0]):
        acc[i] = _add(acc[i], _mul(c, x[i]))


@numba.njit(cache=True)
def vadd_scalar(x, c):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _add(x[i], c)
    return out


@numba.njit(cache=True)
def powers(base, n):
    out = np.empty(n, dtype=np.uint64)
    acc = np.uint64(1)
    for i in range(n):
        out[i] = acc
        acc = _mul(acc, base)
    return out


@numba.njit(cache=True)
def batch_inverse(x):
    """Montgomery batch inversion; all inputs must be nonzero."""
    n = x.shape[0]
    out = np.empty_like(x)
    if n == 0:
        return out
    prefix = np.empty_like(x)
    acc = np.uint64(1)
    for i in range(n):
        prefix[i] = acc
        acc = _mul(acc, x[i])
    inv_acc = _pow(acc, _P - np.uint64(2))
    for i in range(n - 1, -1, -1):
        out[i] = _mul(inv_acc, prefix[i])
        inv_acc = _mul(inv_acc, x[i])
    return out


@numba.njit(cache=True)
def bit_reverse_permute(a):
    n = a.shape[0]
    out = np.empty_like(a)
    log_n = 0
    while (1 << log_n) < n:
        log_n += 1
    for i in range(n):
        r = 0
        v = i
        for _ in range(log_n):
            r = (r << 1) | (v & 1)
            v >>= 1
        out[r] = a[i]
    return out


@numba.njit(cache=True)
def _ntt_in_place(a, twiddles):
    """Decimation-in-time NTT on bit-reversed input; natural-order output.

    ``twiddles`` holds ``w^0 .. w^(n/2-1)`` for a primitive n-th root ``w``.
    """
    n = a.shape[0]
    half = 1
    while half < n:
        step = n // (2 * half)
        for start in range(0, n, 2 * half):
            for j in range(half):
                w = twiddles[j * step]
                u = a[start + j]
                v = _mul(a[start + j + half], w)
                a[start + j] = _add(u, v)
                a[start + j + half] = _sub(u, v)
        half *= 2


_TWIDDLE_CACHE: dict[tuple[int, bool], np.ndarray] = {}


def _twiddles(n: int, inverse: bool) -> np.ndarray:
    key = (n, inverse)
    tw = _TWIDDLE_CACHE.get(key)
    if tw is None:
        w = root_of_unity(n)
        if inverse:
            w = inv(w)
        tw = powers(np.uint64(w), max(n // 2, 1))
        _TWIDDLE_CACHE[key] = tw
    return tw


def ntt(coeffs: np.ndarray) -> np.ndarray:
    """Evaluate a polynomial (coefficient array of power-of-two length) on
    the subgroup of that size, natural order."""
    n = coeffs.shape[0]
    a = bit_reverse_permute(np.ascontiguousarray(coeffs, dtype=np.uint64))
    if n > 1:
        _ntt_in_place(a, _twiddles(n, False))
    return a


def intt(evals: np.ndarray) -> np.ndarray:
    n = evals.shape[0]
    a = bit_reverse_permute(np.ascontiguousarray(evals, dtype=np.uint64))
    if n > 1:
        _ntt_in_place(a, _twiddles(n, True))
    return vscale(a, np.uint64(inv(n)))


def coset_ntt(coeffs: np.ndarray, shift: int, size: int) -> np.ndarray:
    """Evaluate ``coeffs`` on the coset ``shift * <w_size>``, natural order."""
    padded = np.zeros(size, dtype=np.uint64)
    padded[: coeffs.shape[0]] = coeffs
    padded = vmul(padded, powers(np.uint64(shift), size))
    return ntt(padded)


def coset_intt(evals: np.ndarray, shift: int) -> np.ndarray:
    coeffs = intt(evals)
    return vmul(coeffs, powers(np.uint64(inv(shift)), evals.shape[0]))


def eval_poly(coeffs, x: int) -> int:
    """Horner evaluation of a coefficient sequence at a scalar point."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + int(c)) % P
    return acc


@numba.njit(cache=True)
def horner(coeffs, x):
    acc = np.uint64(0)
    for i in range(coeffs.shape[0] - 1, -1, -1):
        acc = _add(_mul(acc, x), coeffs[i])
    return acc


def eval_coeffs(coeffs: np.ndarray, x: int) -> int:
    """Evaluate a uint64 coefficient array at ``x`` (numba Horner)."""
    return int(horner(np.ascontiguousarray(coeffs, dtype=np.uint64), np.uint64(x % P)))
