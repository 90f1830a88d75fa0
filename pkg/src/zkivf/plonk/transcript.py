"""Fiat-Shamir transcript over blake2b."""

from __future__ import annotations

import hashlib
import struct

from ..field import P


class Transcript:
    def __init__(self, domain: bytes):
        self._state = hashlib.blake2b(domain, digest_size=32, person=b"zkivf-transcript").digest()
        self._counter = 0

    def absorb(self, label: bytes, data: bytes) -> None:
        h = hashlib.blake2b(digest_size=32)
        h.update(self._state)
        h.update(struct.pack("<I", len(label)) + label)
        h.update(struct.pack("<Q", len(data)) + data)
        self._state = h.digest()

    def absorb_ints(self, label: bytes, values) -> None:
        self.absorb(label, b"".join(struct.pack("<Q", int(v) % P) for v in values))

    def challenge(self, label: bytes) -> int:
        """Field element derived from the current state; advances the state."""
        self._counter += 1
        h = hashlib.blake2b(digest_size=32)
        h.update(self._state)
        h.update(b"challenge" + label + struct.pack("<Q", self._counter))
        digest = h.digest()
        self._state = hashlib.blake2b(digest + b"next", digest_size=32).digest()
        return int.from_bytes(digest[:16], "little") % P

    def challenge_index(self, label: bytes, bound: int) -> int:
        self._counter += 1
        h = hashlib.blake2b(digest_size=32)
        h.update(self._state)
        h.update(b"index" + label + struct.pack("<Q", self._counter))
        digest = h.digest()
        self._state = hashlib.blake2b(digest + b"next", digest_size=32).digest()
        return int.from_bytes(digest[:16], "little") % bound
