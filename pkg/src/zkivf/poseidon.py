"""Poseidon permutation and fixed-length sponge over the Goldilocks field.

Instance: width 3 (capacity 1, rate 2), S-box x^7, 8 full and 22 partial
rounds. Round constants are drawn from SHAKE-256 by rejection sampling and
the MDS matrix is the Cauchy matrix ``1 / (i + (t + j))``.

Absorption schedule for ``hash_fixed(xs, tag)``:

* the capacity lane starts at ``tag * 2^32 + len(xs)``, the rate lanes at 0;
* ``xs`` is split into chunks of 2 and the last chunk is zero-padded;
* each chunk is added into lanes 1 and 2, then the state is permuted;
* the digest is lane 1 of the final state.

The in-circuit gadget in :mod:`zkivf.gadgets` follows exactly this schedule.
"""

from __future__ import annotations

import hashlib

import numba
import numpy as np

from .field import P, _add, _mul

WIDTH = 3
RATE = 2
FULL_ROUNDS = 8
PARTIAL_ROUNDS = 22
ALPHA = 7
N_ROUNDS = FULL_ROUNDS + PARTIAL_ROUNDS

# domain separation tags for the capacity lane
TAG_LEAF = 1
TAG_NODE = 2
TAG_CODEBOOK = 3
TAG_LIST_HEAD = 4


def _round_constants() -> list[list[int]]:
    xof = hashlib.shake_256(b"zkivf/poseidon/goldilocks/t3/a7/rf8/rp22").digest(
        8 * N_ROUNDS * WIDTH * 4
    )
    out: list[int] = []
    pos = 0
    while len(out) < N_ROUNDS * WIDTH:
        v = int.from_bytes(xof[pos : pos + 8], "little")
        pos += 8
        if v < P:
            out.append(v)
    return [out[r * WIDTH : (r + 1) * WIDTH] for r in range(N_ROUNDS)]


def _mds() -> list[list[int]]:
    return [[pow(i + WIDTH + j, P - 2, P) for j in range(WIDTH)] for i in range(WIDTH)]


ROUND_CONSTANTS = _round_constants()
MDS = _mds()

_RC_ARRAY = np.array(ROUND_CONSTANTS, dtype=np.uint64)
_MDS_ARRAY = np.array(MDS, dtype=np.uint64)


def is_full_round(r: int) -> bool:
    half = FULL_ROUNDS // 2
    return r < half or r >= half + PARTIAL_ROUNDS


def permute(state: list[int]) -> list[int]:
    s = list(state)
    for r in range(N_ROUNDS):
        rc = ROUND_CONSTANTS[r]
        s = [(s[i] + rc[i]) % P for i in range(WIDTH)]
        if is_full_round(r):
            s = [pow(x, ALPHA, P) for x in s]
        else:
            s[0] = pow(s[0], ALPHA, P)
        s = [sum(MDS[i][j] * s[j] for j in range(WIDTH)) % P for i in range(WIDTH)]
    return s


def initial_state(tag: int, length: int) -> list[int]:
    return [(tag << 32) + length, 0, 0]


def hash_fixed(xs, tag: int) -> int:
    xs = [int(x) % P for x in xs]
    if not xs:
        raise ValueError("hash input must be nonempty")
    state = initial_state(tag, len(xs))
    for start in range(0, len(xs), RATE):
        chunk = xs[start : start + RATE]
        chunk += [0] * (RATE - len(chunk))
        state[1] = (state[1] + chunk[0]) % P
        state[2] = (state[2] + chunk[1]) % P
        state = permute(state)
    return state[1]


def hash_node(left: int, right: int) -> int:
    return hash_fixed([left, right], TAG_NODE)


@numba.njit(cache=True)
def _permute_inplace(s, rc, mds, half, partial):
    tmp = np.empty(3, dtype=np.uint64)
    for r in range(rc.shape[0]):
        for i in range(3):
            s[i] = _add(s[i], rc[r, i])
        full = r < half or r >= half + partial
        n_sbox = 3 if full else 1
        for i in range(n_sbox):
            x = s[i]
            x2 = _mul(x, x)
            x4 = _mul(x2, x2)
            x3 = _mul(x2, x)
            s[i] = _mul(x4, x3)
        for i in range(3):
            acc = np.uint64(0)
            for j in range(3):
                acc = _add(acc, _mul(mds[i, j], s[j]))
            tmp[i] = acc
        for i in range(3):
            s[i] = tmp[i]


@numba.njit(cache=True)
def _hash_rows(rows, iv, rc, mds, half, partial):
    b, length = rows.shape
    out = np.empty(b, dtype=np.uint64)
    s = np.empty(3, dtype=np.uint64)
    for row in range(b):
        s[0] = iv
        s[1] = np.uint64(0)
        s[2] = np.uint64(0)
        for start in range(0, length, 2):
            s[1] = _add(s[1], rows[row, start])
            if start + 1 < length:
                s[2] = _add(s[2], rows[row, start + 1])
            _permute_inplace(s, rc, mds, half, partial)
        out[row] = s[1]
    return out


def hash_rows(rows: np.ndarray, tag: int) -> np.ndarray:
    """``hash_fixed`` applied to every row of a 2-D array of field elements."""
    rows = np.ascontiguousarray(rows, dtype=np.uint64)
    if rows.ndim != 2 or rows.shape[1] == 0:
        raise ValueError("expected a nonempty 2-D array")
    iv = np.uint64((tag << 32) + rows.shape[1])
    return _hash_rows(rows, iv, _RC_ARRAY, _MDS_ARRAY, FULL_ROUNDS // 2, PARTIAL_ROUNDS)


def merkle_root_rows(leaves: np.ndarray) -> np.ndarray:
    """Merkle roots of each row of ``leaves`` (shape ``(B, 2^h)``)."""
    level = np.ascontiguousarray(leaves, dtype=np.uint64)
    while level.shape[1] > 1:
        pairs = level.reshape(level.shape[0] * level.shape[1] // 2, 2)
        level = hash_rows(pairs, TAG_NODE).reshape(level.shape[0], level.shape[1] // 2)
    return level[:, 0]
