import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zkivf import gadgets, poseidon
from zkivf.commitment import (
    Commitment,
    commit_snapshot,
    commitment_tree,
    leaf_digests,
    leaf_hash,
    list_root,
    merkle_levels,
    merkle_open_verify,
    merkle_path,
    merkle_root,
    open_list,
    verify_opening,
)
from zkivf.exceptions import IndexOutOfRange, NotPowerOfTwo, PathLengthMismatch
from zkivf.plonk.circuit import Circuit

from helpers import random_snapshot


def _snap(seed=0, **kw):
    return random_snapshot(np.random.default_rng(seed), **kw)


def test_commitment_is_deterministic():
    assert commit_snapshot(_snap(1)) == commit_snapshot(_snap(1))


@pytest.mark.parametrize("field", ["centroids", "flags", "items", "codes", "codebooks"])
def test_any_change_moves_the_commitment(field):
    s = _snap(2, K=4, bits=4)
    t = s.copy()
    arr = getattr(t, field)
    if field == "flags":
        # swap a valid slot with a padding slot, keeping the snapshot canonical
        v = tuple(np.argwhere(arr == 1)[0])
        p = tuple(np.argwhere(arr == 0)[0])
        arr[v], arr[p] = 0, 1
        t.items[p], t.items[v] = t.items[v], 0
        t.codes[p], t.codes[v] = t.codes[v], 0
    elif field == "items":
        v = tuple(np.argwhere(t.flags == 1)[0])
        arr[v] = arr.max() + 1
    elif field == "codes":
        v = tuple(np.argwhere(t.flags == 1)[0])
        arr[v][0] = (arr[v][0] + 1) % 4
    else:
        arr.reshape(-1)[0] = (arr.reshape(-1)[0] + 1) % 5
    t.validate()
    c1, c2 = commit_snapshot(s), commit_snapshot(t)
    assert c1 != c2
    if field == "codebooks":
        assert c1.root_mk == c2.root_mk and c1.root_cb != c2.root_cb
    else:
        assert c1.root_cb == c2.root_cb


def test_bulk_leaf_digests_match_scalar_hash():
    s = _snap(3)
    leaves = leaf_digests(s)
    for i in range(s.config.n_list):
        for j in range(s.config.n):
            assert int(leaves[i, j]) == leaf_hash(i, j, s.record(i, j))
        assert list_root(i, s.records(i)) == int(commitment_tree(s).list_roots[i])


@given(st.integers(0, 4), st.integers(0, 2**31))
def test_merkle_paths_open_to_root(log_n, seed):
    rng = np.random.default_rng(seed)
    leaves = [int(x) for x in rng.integers(0, 2**63, size=1 << log_n)]
    levels = merkle_levels(leaves)
    root = merkle_root(leaves)
    assert levels[-1][0] == root
    for pos, leaf in enumerate(leaves):
        path = merkle_path(levels, pos)
        assert merkle_open_verify(leaf, pos, path, root, depth=log_n)
        assert not merkle_open_verify(leaf + 1, pos, path, root)
        if log_n:
            assert not merkle_open_verify(leaf, pos ^ 1, path, root) or leaves[pos ^ 1] == leaf


def test_merkle_argument_checks():
    with pytest.raises(NotPowerOfTwo):
        merkle_root([1, 2, 3])
    with pytest.raises(PathLengthMismatch):
        merkle_open_verify(1, 0, [2], 3, depth=2)
    with pytest.raises(PathLengthMismatch):
        merkle_open_verify(1, 2, [2], 3)


def test_openings_verify_and_detect_tampering():
    s = _snap(4, n_list=8)
    tree = commitment_tree(s)
    com = tree.commitment
    for i in range(8):
        op = open_list(s, i, tree)
        assert verify_opening(op, com, 8)
    op = open_list(s, 3, tree)
    rec = op.records[0]
    bad = type(rec)(rec.f, rec.item + 1, rec.code)
    forged = type(op)(op.i, op.centroid, op.list_root, (bad,) + op.records[1:], op.auth_path)
    assert not verify_opening(forged, com, 8)
    moved = type(op)(4, op.centroid, op.list_root, op.records, op.auth_path)
    assert not verify_opening(moved, com, 8)
    with pytest.raises(IndexOutOfRange):
        open_list(s, 8)


def test_commitment_bytes():
    com = Commitment(2**64 - 2**32, 7)
    assert Commitment.from_bytes(com.to_bytes()) == com
    assert len(com.hex()) == 33
    with pytest.raises(ValueError):
        Commitment.from_bytes(b"short")


@given(st.integers(0, 3), st.integers(0, 2**31))
def test_circuit_merkle_open_matches_native(log_n, seed):
    rng = np.random.default_rng(seed)
    leaves = [int(x) for x in rng.integers(0, 2**63, size=1 << log_n)]
    levels = merkle_levels(leaves)
    pos = int(rng.integers(0, 1 << log_n))
    cs = Circuit()
    root = gadgets.merkle_open(cs, cs.witness(leaves[pos]), cs.witness(pos),
                               [cs.witness(x) for x in merkle_path(levels, pos)])
    assert cs.value(root) == levels[-1][0]
    cs.check()
    cs2 = Circuit()
    root2 = gadgets.merkle_root(cs2, [cs2.witness(x) for x in leaves])
    assert cs2.value(root2) == levels[-1][0]
    nodes = (1 << log_n) - 1
    assert cs2.num_gates % max(1, nodes) == 0  # every node hash costs the same


def test_tag_values():
    assert (poseidon.TAG_LEAF, poseidon.TAG_NODE, poseidon.TAG_CODEBOOK,
            poseidon.TAG_LIST_HEAD) == (1, 2, 3, 4)
