"""Append-only epoch store of committed snapshots.

Layout::

    <root>/epoch-000000/snapshot.v3db
    <root>/epoch-000000/commitment.v3db
    <root>/.lock

Epochs are created by :meth:`VersionStore.append` under an exclusive
advisory lock, and files are written exclusively so an existing commitment
is never replaced.
"""

from __future__ import annotations

import fcntl
import os
import re
from contextlib import contextmanager
from pathlib import Path

from .commitment import Commitment, commit_snapshot
from .exceptions import ZkIvfError
from .formats import commitment_from_bytes, commitment_to_bytes, snapshot_from_bytes, snapshot_to_bytes
from .shaping import Snapshot

_EPOCH_RE = re.compile(r"^epoch-(\d{6})$")


class StoreError(ZkIvfError):
    pass


class VersionStore:
    def __init__(self, root):
        self.root = Path(root)

    @contextmanager
    def _locked(self):
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.root / ".lock", "a+") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def _dir(self, epoch: int) -> Path:
        return self.root / f"epoch-{epoch:06d}"

    def epochs(self) -> list[int]:
        if not self.root.is_dir():
            return []
        out = []
        for p in self.root.iterdir():
            m = _EPOCH_RE.match(p.name)
            if m and (p / "commitment.v3db").is_file():
                out.append(int(m.group(1)))
        return sorted(out)

    def latest(self) -> int:
        eps = self.epochs()
        if not eps:
            raise StoreError(f"store {self.root} has no epochs")
        return eps[-1]

    def append(self, s: Snapshot, epoch: int | None = None) -> tuple[int, Commitment]:
        """Commit ``s`` as a new epoch; ``epoch`` must exceed every existing one."""
        com = commit_snapshot(s)
        with self._locked():
            eps = self.epochs()
            nxt = eps[-1] + 1 if eps else 0
            if epoch is None:
                epoch = nxt
            elif epoch in eps:
                raise StoreError(f"epoch {epoch} is already committed")
            elif epoch < nxt:
                raise StoreError(f"epoch {epoch} is not above the latest epoch {nxt - 1}")
            d = self._dir(epoch)
            d.mkdir(parents=True, exist_ok=True)
            leftover = d / "snapshot.v3db"
            if leftover.exists():  # an earlier append died before committing
                leftover.unlink()
            _write_new(d / "snapshot.v3db", snapshot_to_bytes(s))
            # commitment last: its presence marks the epoch complete
            _write_new(d / "commitment.v3db", commitment_to_bytes(com))
        return epoch, com

    def _resolve(self, epoch: int | None) -> int:
        if epoch is None:
            return self.latest()
        if epoch not in self.epochs():
            raise StoreError(f"epoch {epoch} not found in {self.root}")
        return epoch

    def commitment(self, epoch: int | None = None) -> Commitment:
        path = self._dir(self._resolve(epoch)) / "commitment.v3db"
        return commitment_from_bytes(path.read_bytes())

    def snapshot(self, epoch: int | None = None) -> Snapshot:
        path = self._dir(self._resolve(epoch)) / "snapshot.v3db"
        return snapshot_from_bytes(path.read_bytes())


def _write_new(path: Path, data: bytes) -> None:
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o444)
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
