"""Merkle trees over committed evaluation vectors.

A leaf is a group of ``LEAF_WIDTH`` consecutive positions of the
bit-reversed evaluation vectors of every polynomial in the batch, serialized
as little-endian u64 values and followed by a per-leaf salt when hiding.
"""

from __future__ import annotations

import hashlib

import numpy as np

LEAF_WIDTH = 8
DIGEST = 32
SALT = 16


def _leaf_digest(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=DIGEST, person=b"zkivf-leaf").digest()


def _node_digest(left: bytes, right: bytes) -> bytes:
    return hashlib.blake2b(left + right, digest_size=DIGEST, person=b"zkivf-node").digest()


class MerkleTree:
    def __init__(self, columns: list[np.ndarray], salts: bytes | None = None):
        """``columns``: evaluation vectors of equal power-of-two length in
        bit-reversed order."""
        mat = np.stack([np.asarray(c, dtype="<u8") for c in columns], axis=1)
        n_leaves = mat.shape[0] // LEAF_WIDTH
        self.width = len(columns)
        self.rows = np.ascontiguousarray(mat.reshape(n_leaves, LEAF_WIDTH * self.width))
        self.salts = salts
        raw = self.rows.tobytes()
        stride = LEAF_WIDTH * self.width * 8
        if salts is None:
            leaves = [_leaf_digest(raw[i * stride : (i + 1) * stride]) for i in range(n_leaves)]
        else:
            leaves = [_leaf_digest(raw[i * stride : (i + 1) * stride] + salts[i * SALT : (i + 1) * SALT])
                      for i in range(n_leaves)]
        self.levels = [leaves]
        while len(self.levels[-1]) > 1:
            prev = self.levels[-1]
            self.levels.append([_node_digest(prev[i], prev[i + 1]) for i in range(0, len(prev), 2)])

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def open(self, index: int):
        """(leaf values (LEAF_WIDTH x width) as ints, salt, sibling path)."""
        values = self.rows[index].reshape(LEAF_WIDTH, self.width)
        salt = b"" if self.salts is None else self.salts[index * SALT : (index + 1) * SALT]
        path = []
        pos = index
        for level in self.levels[:-1]:
            path.append(level[pos ^ 1])
            pos >>= 1
        return values, salt, path


def verify_leaf(root: bytes, index: int, values: np.ndarray, salt: bytes, path: list[bytes]) -> bool:
    cur = _leaf_digest(np.ascontiguousarray(values, dtype="<u8").tobytes() + salt)
    pos = index
    for sib in path:
        cur = _node_digest(sib, cur) if pos & 1 else _node_digest(cur, sib)
        pos >>= 1
    return pos == 0 and cur == root
