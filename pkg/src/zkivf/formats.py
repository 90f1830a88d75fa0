"""Binary file formats and dataset readers.

All integers are little-endian. Every file starts with a 7-byte magic and a
u32 format version. Arrays are written as a u32 element count followed by
the elements as u64.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .commitment import Commitment
from .exceptions import DimensionMismatch, MalformedFile
from .fixedpoint import FieldSpec, FxScale
from .shaping import IvfPqConfig, Snapshot

SNAPSHOT_MAGIC = b"V3DBSNP"
COMMITMENT_MAGIC = b"V3DBCOM"
PROOF_MAGIC = b"V3DBPRF"
FORMAT_VERSION = 1

_CONFIG_FIELDS = ("N0", "D", "n_list", "n_probe", "n", "M", "K", "k")


class Writer:
    def __init__(self):
        self.buf = io.BytesIO()

    def raw(self, data: bytes):
        self.buf.write(data)

    def u32(self, v: int):
        self.buf.write(struct.pack("<I", v))

    def u64(self, v: int):
        self.buf.write(struct.pack("<Q", v))

    def f64(self, v: float):
        self.buf.write(struct.pack("<d", v))

    def blob(self, data: bytes):
        self.u32(len(data))
        self.buf.write(data)

    def array(self, arr):
        arr = np.ascontiguousarray(arr, dtype="<u8").reshape(-1)
        self.u32(arr.size)
        self.buf.write(arr.tobytes())

    def getvalue(self) -> bytes:
        return self.buf.getvalue()


class Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def raw(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedFile("unexpected end of data")
        out = bytes(self.data[self.pos : self.pos + n])
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.raw(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.raw(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.raw(8))[0]

    def blob(self) -> bytes:
        return self.raw(self.u32())

    def array(self, expected: int | None = None) -> np.ndarray:
        count = self.u32()
        if expected is not None and count != expected:
            raise MalformedFile(f"array of {count} elements, expected {expected}")
        return np.frombuffer(self.raw(8 * count), dtype="<u8").astype(np.uint64)

    def header(self, magic: bytes):
        if self.raw(len(magic)) != magic:
            raise MalformedFile(f"bad magic, expected {magic!r}")
        version = self.u32()
        if version != FORMAT_VERSION:
            raise MalformedFile(f"unsupported format version {version}")

    def done(self):
        if self.pos != len(self.data):
            raise MalformedFile("trailing bytes")


def write_config(w: Writer, config: IvfPqConfig, scale: FxScale, field: FieldSpec):
    for name in _CONFIG_FIELDS:
        w.u64(getattr(config, name))
    w.f64(scale.v_max)
    w.u32(scale.bits)
    w.u32(int(scale.signed))
    w.u32(field.modulus_bits)
    w.u32(field.t_cmp)


def read_config(r: Reader):
    try:
        config = IvfPqConfig(**{name: r.u64() for name in _CONFIG_FIELDS})
        scale = FxScale(v_max=r.f64(), bits=r.u32(), signed=bool(r.u32()))
        field = FieldSpec(modulus_bits=r.u32(), t_cmp=r.u32())
    except ValueError as exc:
        raise MalformedFile(str(exc)) from exc
    return config, scale, field


def snapshot_to_bytes(s: Snapshot) -> bytes:
    c = s.config
    w = Writer()
    w.raw(SNAPSHOT_MAGIC)
    w.u32(FORMAT_VERSION)
    write_config(w, c, s.scale, s.field)
    w.array(s.centroids)
    w.array(s.flags)
    w.array(s.items)
    w.array(s.codes)
    w.array(s.codebooks)
    return w.getvalue()


def snapshot_from_bytes(data: bytes) -> Snapshot:
    r = Reader(data)
    r.header(SNAPSHOT_MAGIC)
    c, scale, field = read_config(r)
    centroids = r.array(c.n_list * c.D).astype(np.int64)
    flags = r.array(c.n_list * c.n).astype(np.int64)
    items = r.array(c.n_list * c.n)
    codes = r.array(c.n_list * c.n * c.M).astype(np.int64)
    codebooks = r.array(c.M * c.K * c.d).astype(np.int64)
    r.done()
    s = Snapshot(c, scale, field, centroids, flags, items, codes, codebooks)
    try:
        s.validate()
    except ValueError as exc:
        raise MalformedFile(str(exc)) from exc
    return s


def commitment_to_bytes(com: Commitment) -> bytes:
    w = Writer()
    w.raw(COMMITMENT_MAGIC)
    w.u32(FORMAT_VERSION)
    w.blob(com.to_bytes())
    return w.getvalue()


def commitment_from_bytes(data: bytes) -> Commitment:
    r = Reader(data)
    r.header(COMMITMENT_MAGIC)
    com = Commitment.from_bytes(r.blob())
    r.done()
    return com


def save_snapshot(s: Snapshot, path) -> None:
    Path(path).write_bytes(snapshot_to_bytes(s))


def load_snapshot(path) -> Snapshot:
    return snapshot_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# fvecs / ivecs


def _read_vecs(path, dtype, expected_dim: int | None) -> np.ndarray:
    raw = np.fromfile(path, dtype="<i4")
    if raw.size == 0:
        return np.zeros((0, expected_dim or 0), dtype=dtype)
    dim = int(raw[0])
    if dim <= 0 or raw.size % (dim + 1):
        raise MalformedFile(f"{path}: record layout inconsistent with dimension {dim}")
    rows = raw.reshape(-1, dim + 1)
    if np.any(rows[:, 0] != dim):
        raise MalformedFile(f"{path}: records with differing dimensions")
    if expected_dim is not None and dim != expected_dim:
        raise DimensionMismatch(f"{path}: dimension {dim}, expected {expected_dim}")
    return rows[:, 1:].copy().view(dtype)


def read_fvecs(path, expected_dim: int | None = None) -> np.ndarray:
    return _read_vecs(path, "<f4", expected_dim).astype(np.float32)


def read_ivecs(path, expected_dim: int | None = None) -> np.ndarray:
    return _read_vecs(path, "<i4", expected_dim).astype(np.int32)


def _write_vecs(path, data, dtype):
    data = np.asarray(data, dtype=dtype)
    if data.ndim != 2:
        raise DimensionMismatch("expected a 2-D array")
    dims = np.full((data.shape[0], 1), data.shape[1], dtype="<i4")
    np.concatenate([dims, data.view("<i4")], axis=1).tofile(path)


def write_fvecs(path, data) -> None:
    _write_vecs(path, data, "<f4")


def write_ivecs(path, data) -> None:
    _write_vecs(path, data, "<i4")


__all__ = [
    "SNAPSHOT_MAGIC", "COMMITMENT_MAGIC", "PROOF_MAGIC", "FORMAT_VERSION",
    "Writer", "Reader", "snapshot_to_bytes", "snapshot_from_bytes",
    "commitment_to_bytes", "commitment_from_bytes", "save_snapshot", "load_snapshot",
    "read_fvecs", "read_ivecs", "write_fvecs", "write_ivecs",
]
