"""Fixed-point encoding of real vectors into range-bounded field integers.

A coordinate ``v`` with ``|v| <= v_max`` encodes to
``round((2^bits - 1) * v / v_max)`` with ties away from zero. Signed scales
add an offset of ``2^bits - 1`` so every stored coordinate is nonnegative;
squared distances are unaffected by the shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import CoordinateOutOfRange, DimensionMismatch, InvalidConfig, RangeOverflow
from .field import MODULUS_BITS


@dataclass(frozen=True)
class FieldSpec:
    modulus_bits: int = MODULUS_BITS
    t_cmp: int = 48

    def __post_init__(self):
        if self.modulus_bits != MODULUS_BITS:
            raise InvalidConfig(f"only the {MODULUS_BITS}-bit Goldilocks field is supported")
        if not 2 <= self.t_cmp <= self.modulus_bits - 1:
            raise InvalidConfig(f"t_cmp must lie in [2, {self.modulus_bits - 1}]")

    @property
    def half_range(self) -> int:
        """Exclusive upper bound ``2^(t_cmp-1)`` on compared values."""
        return 1 << (self.t_cmp - 1)

    @property
    def d_max(self) -> int:
        """Masked distance assigned to padding slots."""
        return self.half_range - 1


@dataclass(frozen=True)
class FxScale:
    v_max: float
    bits: int = 16
    signed: bool = False

    def __post_init__(self):
        if not self.v_max > 0:
            raise InvalidConfig("v_max must be positive")
        if self.bits < 1:
            raise InvalidConfig("bits must be at least 1")

    @property
    def full_scale(self) -> int:
        return (1 << self.bits) - 1

    @property
    def offset(self) -> int:
        return self.full_scale if self.signed else 0

    @property
    def coord_bits(self) -> int:
        """Bit width that bounds every encoded coordinate."""
        return self.bits + 1 if self.signed else self.bits

    @property
    def coord_max(self) -> int:
        return 2 * self.full_scale if self.signed else self.full_scale

    @property
    def residual_offset(self) -> int:
        """Shift applied to residuals ``x - mu`` and stored codewords."""
        return (1 << self.coord_bits) - 1

    @property
    def residual_bits(self) -> int:
        return self.coord_bits + 1

    @classmethod
    def fit(cls, data: np.ndarray, bits: int = 16) -> "FxScale":
        """Scale covering every coordinate of ``data``."""
        data = np.asarray(data, dtype=np.float64)
        v_max = float(np.max(np.abs(data))) if data.size else 1.0
        return cls(v_max=v_max if v_max > 0 else 1.0, bits=bits, signed=bool(np.any(data < 0)))


@dataclass(frozen=True, eq=False)
class FxVector:
    coords: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coords, dtype=np.int64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def dim(self) -> int:
        return int(self.coords.shape[0])

    def __eq__(self, other):
        return isinstance(other, FxVector) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __len__(self):
        return self.dim

    def __iter__(self):
        return iter(int(c) for c in self.coords)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def encode_matrix(data, scale: FxScale) -> np.ndarray:
    """Encode an array of reals of any shape; returns int64 of the same shape."""
    data = np.asarray(data, dtype=np.float64)
    if np.any(np.abs(data) > scale.v_max):
        raise CoordinateOutOfRange(f"coordinate magnitude exceeds v_max={scale.v_max}")
    if not scale.signed and np.any(data < 0):
        raise CoordinateOutOfRange("negative coordinate under an unsigned scale")
    scaled = _round_half_away(scale.full_scale * data / scale.v_max)
    return scaled.astype(np.int64) + scale.offset


def encode_vector(v, scale: FxScale) -> FxVector:
    return FxVector(encode_matrix(np.asarray(v, dtype=np.float64).reshape(-1), scale))


def decode_matrix(coords, scale: FxScale) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.float64)
    return (coords - scale.offset) * scale.v_max / scale.full_scale


def decode_vector(x: FxVector, scale: FxScale) -> np.ndarray:
    return decode_matrix(x.coords, scale)


def _coords(x) -> np.ndarray:
    return x.coords if isinstance(x, FxVector) else np.asarray(x, dtype=np.int64)


def dist_sq(x, y, field: FieldSpec = FieldSpec()) -> int:
    """Squared l2 distance over the integers, guarded by the static range bound."""
    xc, yc = _coords(x), _coords(y)
    if xc.shape != yc.shape:
        raise DimensionMismatch(f"dimension {xc.shape[0]} != {yc.shape[0]}")
    if xc.size == 0:
        return 0
    top = max(int(np.max(np.abs(xc))), int(np.max(np.abs(yc))))
    if xc.shape[0] * top * top >= field.half_range:
        raise RangeOverflow("static bound D * max_coord^2 reaches 2^(t_cmp-1)")
    diff = xc - yc
    return int(np.dot(diff, diff))


def check_static_bounds(dim: int, scale: FxScale, field: FieldSpec) -> None:
    """Raise unless every distance the query semantics can produce stays
    strictly below ``d_max`` (so padding sorts last and nothing wraps)."""
    centroid_bound = dim * (1 << scale.coord_bits) ** 2
    adc_bound = dim * (1 << scale.residual_bits) ** 2
    if centroid_bound >= field.half_range or adc_bound > field.d_max:
        raise RangeOverflow(
            f"D={dim} with {scale.coord_bits}-bit coordinates overflows t_cmp={field.t_cmp}"
        )
