"""Snapshot commitments ``com = (root_mk, root_cb)``.

Digests are single Goldilocks elements produced by the Poseidon sponge in
:mod:`zkivf.poseidon`, with a distinct capacity tag per role:

* slot leaf  ``H_leaf(i, j, f, item, code_0 .. code_{M-1})``
* list head  ``H_head(i, mu_i[0..D-1], root_i)``
* tree node  ``H_node(left, right)``
* codebooks  ``H_cb(C[0,0,:], C[0,1,:], ..., C[M-1,K-1,:])``

Merkle trees are standard binary trees over leaf digests; a position's
bits, least significant first, tell at each level whether the running
digest is a right child.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import poseidon
from .exceptions import IndexOutOfRange, NotPowerOfTwo, PathLengthMismatch
from .shaping import SlotRecord, Snapshot, is_power_of_two

DIGEST_BYTES = 8


@dataclass(frozen=True)
class Commitment:
    root_mk: int
    root_cb: int

    def to_bytes(self) -> bytes:
        return self.root_mk.to_bytes(DIGEST_BYTES, "little") + self.root_cb.to_bytes(
            DIGEST_BYTES, "little")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Commitment":
        if len(data) != 2 * DIGEST_BYTES:
            raise ValueError("commitment must be 16 bytes")
        return cls(int.from_bytes(data[:DIGEST_BYTES], "little"),
                   int.from_bytes(data[DIGEST_BYTES:], "little"))

    def hex(self) -> str:
        return f"{self.root_mk:016x}:{self.root_cb:016x}"


@dataclass(frozen=True)
class ListOpening:
    i: int
    centroid: tuple
    list_root: int
    records: tuple
    auth_path: tuple

    def head_hash(self) -> int:
        return list_head_hash(self.i, self.centroid, self.list_root)


def leaf_hash(i: int, j: int, rec: SlotRecord) -> int:
    return poseidon.hash_fixed([i, j, rec.f, rec.item, *rec.code], poseidon.TAG_LEAF)


def list_head_hash(i: int, centroid, root: int) -> int:
    return poseidon.hash_fixed([i, *[int(c) for c in centroid], root], poseidon.TAG_LIST_HEAD)


def merkle_root(leaves) -> int:
    leaves = [int(x) for x in leaves]
    if not is_power_of_two(len(leaves)):
        raise NotPowerOfTwo(f"{len(leaves)} leaves")
    while len(leaves) > 1:
        leaves = [poseidon.hash_node(leaves[t], leaves[t + 1]) for t in range(0, len(leaves), 2)]
    return leaves[0]


def merkle_levels(leaves) -> list[list[int]]:
    levels = [[int(x) for x in leaves]]
    if not is_power_of_two(len(levels[0])):
        raise NotPowerOfTwo(f"{len(levels[0])} leaves")
    while len(levels[-1]) > 1:
        prev = levels[-1]
        levels.append([poseidon.hash_node(prev[t], prev[t + 1]) for t in range(0, len(prev), 2)])
    return levels


def merkle_path(levels: list[list[int]], position: int) -> list[int]:
    path = []
    for level in levels[:-1]:
        path.append(level[position ^ 1])
        position >>= 1
    return path


def merkle_open(leaf: int, position: int, path) -> int:
    cur = int(leaf)
    for sibling in path:
        if position & 1:
            cur = poseidon.hash_node(int(sibling), cur)
        else:
            cur = poseidon.hash_node(cur, int(sibling))
        position >>= 1
    return cur


def merkle_open_verify(leaf: int, position: int, path, root: int, depth: int | None = None) -> bool:
    path = list(path)
    if depth is not None and len(path) != depth:
        raise PathLengthMismatch(f"path of length {len(path)} for depth {depth}")
    if position < 0 or position >> len(path):
        raise PathLengthMismatch(f"position {position} does not fit a depth-{len(path)} tree")
    return merkle_open(leaf, position, path) == int(root)


def list_root(i: int, records) -> int:
    return merkle_root([leaf_hash(i, j, rec) for j, rec in enumerate(records)])


# ---------------------------------------------------------------------------
# bulk computation over a whole snapshot


def leaf_digests(s: Snapshot) -> np.ndarray:
    """All slot leaf digests, shape (n_list, n)."""
    c = s.config
    ii, jj = np.meshgrid(np.arange(c.n_list), np.arange(c.n), indexing="ij")
    rows = np.concatenate([
        ii.reshape(-1, 1).astype(np.uint64), jj.reshape(-1, 1).astype(np.uint64),
        s.flags.reshape(-1, 1).astype(np.uint64), s.items.reshape(-1, 1),
        s.codes.reshape(-1, c.M).astype(np.uint64),
    ], axis=1)
    return poseidon.hash_rows(rows, poseidon.TAG_LEAF).reshape(c.n_list, c.n)


def list_roots(s: Snapshot) -> np.ndarray:
    return poseidon.merkle_root_rows(leaf_digests(s))


def head_digests(s: Snapshot, roots: np.ndarray | None = None) -> np.ndarray:
    c = s.config
    if roots is None:
        roots = list_roots(s)
    rows = np.concatenate([
        np.arange(c.n_list, dtype=np.uint64).reshape(-1, 1),
        s.centroids.astype(np.uint64),
        np.asarray(roots, dtype=np.uint64).reshape(-1, 1),
    ], axis=1)
    return poseidon.hash_rows(rows, poseidon.TAG_LIST_HEAD)


def codebook_digest(s: Snapshot) -> int:
    flat = s.codebooks.astype(np.uint64).reshape(1, -1)
    return int(poseidon.hash_rows(flat, poseidon.TAG_CODEBOOK)[0])


@dataclass
class CommitmentTree:
    """Commitment plus the intermediate digests needed for openings."""

    commitment: Commitment
    list_roots: np.ndarray
    head_levels: list[list[int]]


def commitment_tree(s: Snapshot) -> CommitmentTree:
    if not is_power_of_two(s.config.n):
        raise NotPowerOfTwo(f"n={s.config.n}")
    roots = list_roots(s)
    heads = head_digests(s, roots)
    levels = merkle_levels(heads)
    return CommitmentTree(Commitment(levels[-1][0], codebook_digest(s)), roots, levels)


def commit_snapshot(s: Snapshot) -> Commitment:
    return commitment_tree(s).commitment


def open_list(s: Snapshot, i: int, tree: CommitmentTree | None = None) -> ListOpening:
    if not 0 <= i < s.config.n_list:
        raise IndexOutOfRange(f"list index {i} outside [0, {s.config.n_list})")
    if tree is None:
        tree = commitment_tree(s)
    return ListOpening(
        i=i,
        centroid=tuple(int(x) for x in s.centroids[i]),
        list_root=int(tree.list_roots[i]),
        records=tuple(s.records(i)),
        auth_path=tuple(merkle_path(tree.head_levels, i)),
    )


def verify_opening(opening: ListOpening, com: Commitment, n_list: int) -> bool:
    depth = n_list.bit_length() - 1
    if list_root(opening.i, opening.records) != opening.list_root:
        return False
    return merkle_open_verify(opening.head_hash(), opening.i, opening.auth_path,
                              com.root_mk, depth)
