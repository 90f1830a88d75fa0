import os

import numpy as np
import pytest

from zkivf.commitment import commit_snapshot
from zkivf.exceptions import DimensionMismatch, MalformedFile
from zkivf.formats import (
    commitment_from_bytes,
    commitment_to_bytes,
    load_snapshot,
    read_fvecs,
    read_ivecs,
    save_snapshot,
    snapshot_from_bytes,
    snapshot_to_bytes,
    write_fvecs,
    write_ivecs,
)
from zkivf.store import StoreError, VersionStore

from helpers import random_snapshot


def _snap(seed=0):
    return random_snapshot(np.random.default_rng(seed))


def test_snapshot_roundtrip(tmp_path):
    s = _snap()
    assert snapshot_from_bytes(snapshot_to_bytes(s)).equals(s)
    save_snapshot(s, tmp_path / "s.v3db")
    assert load_snapshot(tmp_path / "s.v3db").equals(s)


def test_snapshot_bytes_reject_garbage():
    raw = snapshot_to_bytes(_snap())
    with pytest.raises(MalformedFile):
        snapshot_from_bytes(b"XXXXXXX" + raw[7:])
    with pytest.raises(MalformedFile):
        snapshot_from_bytes(raw[:-3])
    with pytest.raises(MalformedFile):
        snapshot_from_bytes(raw + b"\0")


def test_commitment_roundtrip():
    com = commit_snapshot(_snap())
    assert commitment_from_bytes(commitment_to_bytes(com)) == com


def test_vecs_roundtrip(tmp_path):
    f = np.random.default_rng(0).normal(size=(5, 3)).astype(np.float32)
    write_fvecs(tmp_path / "a.fvecs", f)
    np.testing.assert_array_equal(read_fvecs(tmp_path / "a.fvecs", 3), f)
    i = np.arange(12, dtype=np.int32).reshape(3, 4)
    write_ivecs(tmp_path / "a.ivecs", i)
    np.testing.assert_array_equal(read_ivecs(tmp_path / "a.ivecs"), i)
    with pytest.raises(DimensionMismatch):
        read_fvecs(tmp_path / "a.fvecs", 4)
    (tmp_path / "bad.fvecs").write_bytes((tmp_path / "a.fvecs").read_bytes()[:-4])
    with pytest.raises(MalformedFile):
        read_fvecs(tmp_path / "bad.fvecs")


def test_store_appends_epochs(tmp_path):
    store = VersionStore(tmp_path / "st")
    assert store.epochs() == []
    e0, c0 = store.append(_snap(0))
    e1, c1 = store.append(_snap(1))
    assert (e0, e1) == (0, 1) and store.latest() == 1
    assert store.commitment(0) == c0 and store.commitment() == c1
    assert store.snapshot(0).equals(_snap(0))
    e5, _ = store.append(_snap(2), epoch=5)
    assert e5 == 5 and store.epochs() == [0, 1, 5]


def test_store_refuses_rewrites(tmp_path):
    store = VersionStore(tmp_path)
    store.append(_snap(0))
    store.append(_snap(1), epoch=3)
    with pytest.raises(StoreError):
        store.append(_snap(2), epoch=3)
    with pytest.raises(StoreError):
        store.append(_snap(2), epoch=2)
    with pytest.raises(StoreError):
        store.commitment(7)
    with pytest.raises(StoreError):
        VersionStore(tmp_path / "empty").latest()


def test_store_recovers_from_half_written_epoch(tmp_path):
    store = VersionStore(tmp_path)
    d = tmp_path / "epoch-000000"
    d.mkdir()
    (d / "snapshot.v3db").write_bytes(b"partial")
    assert store.epochs() == []
    e, com = store.append(_snap(0))
    assert e == 0 and store.commitment(0) == com


def test_committed_files_are_read_only(tmp_path):
    store = VersionStore(tmp_path)
    store.append(_snap(0))
    mode = os.stat(tmp_path / "epoch-000000" / "commitment.v3db").st_mode
    assert not mode & 0o222
