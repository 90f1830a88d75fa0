"""Index shaping: turn a raw corpus into a fixed-shape IVF-PQ snapshot.

Pipeline: coarse k-means, nearest-centroid assignment, capacity
rebalancing, padding every list to ``n`` slots, per-block PQ training on
residuals and residual encoding.

Storage conventions (all values are nonnegative field integers):

* centroids are fixed-point vectors in ``[0, scale.coord_max]``;
* a residual ``x - mu`` is stored shifted by ``rho = scale.residual_offset``
  so it lies in ``[0, 2 * rho]``; codewords live in the same shifted space;
* padding slots are ``(f=0, item=0, code=0...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .exceptions import (
    DimensionMismatch,
    InfeasibleCapacity,
    InvalidConfig,
    TooFewVectors,
)
from .field import P
from .fixedpoint import FieldSpec, FxScale, check_static_bounds


def is_power_of_two(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


@dataclass(frozen=True)
class IvfPqConfig:
    N0: int
    D: int
    n_list: int
    n_probe: int
    n: int
    M: int
    K: int
    k: int

    def __post_init__(self):
        self.validate()

    @property
    def d(self) -> int:
        return self.D // self.M

    @property
    def N(self) -> int:
        return self.n_list * self.n

    @property
    def n_sel(self) -> int:
        return self.n_probe * self.n

    def validate(self) -> None:
        for name in ("N0", "D", "n_list", "n_probe", "n", "M", "K", "k"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise InvalidConfig(f"{name} must be a positive integer, got {value!r}")
        if self.D % self.M:
            raise InvalidConfig(f"D={self.D} is not a multiple of M={self.M}")
        if self.N < self.N0:
            raise InvalidConfig(f"capacity n_list*n={self.N} is below N0={self.N0}")
        if self.n_probe > self.n_list:
            raise InvalidConfig("n_probe exceeds n_list")
        if self.k > self.n_sel:
            raise InvalidConfig("k exceeds n_probe * n")
        for name in ("n", "n_list", "K"):
            if not is_power_of_two(getattr(self, name)):
                raise InvalidConfig(f"{name} must be a power of two")

    def as_dict(self) -> dict:
        return {name: int(getattr(self, name)) for name in
                ("N0", "D", "n_list", "n_probe", "n", "M", "K", "k")}


@dataclass(frozen=True)
class SlotRecord:
    f: int
    item: int
    code: tuple

    def fields(self) -> list[int]:
        return [self.f, self.item, *self.code]


PADDING_ITEM = 0


@dataclass(frozen=True)
class RebalanceReport:
    moved_count: int
    rounds: int


@dataclass(eq=False)
class Snapshot:
    """Fixed-shape IVF-PQ state. Arrays are int64 except ``items`` (uint64)."""

    config: IvfPqConfig
    scale: FxScale
    field: FieldSpec
    centroids: np.ndarray  # (n_list, D)
    flags: np.ndarray  # (n_list, n)
    items: np.ndarray  # (n_list, n)
    codes: np.ndarray  # (n_list, n, M)
    codebooks: np.ndarray  # (M, K, d), residual-offset space
    report: RebalanceReport | None = dc_field(default=None, compare=False)

    def __post_init__(self):
        c = self.config
        self.centroids = np.asarray(self.centroids, dtype=np.int64).reshape(c.n_list, c.D)
        self.flags = np.asarray(self.flags, dtype=np.int64).reshape(c.n_list, c.n)
        self.items = np.asarray(self.items, dtype=np.uint64).reshape(c.n_list, c.n)
        self.codes = np.asarray(self.codes, dtype=np.int64).reshape(c.n_list, c.n, c.M)
        self.codebooks = np.asarray(self.codebooks, dtype=np.int64).reshape(c.M, c.K, c.d)

    def record(self, i: int, j: int) -> SlotRecord:
        return SlotRecord(int(self.flags[i, j]), int(self.items[i, j]),
                          tuple(int(v) for v in self.codes[i, j]))

    def records(self, i: int) -> list[SlotRecord]:
        return [self.record(i, j) for j in range(self.config.n)]

    @property
    def valid_count(self) -> int:
        return int(self.flags.sum())

    def validate(self) -> None:
        c = self.config
        if not np.all((self.flags == 0) | (self.flags == 1)):
            raise InvalidConfig("flags must be 0/1")
        if np.any(self.codes < 0) or np.any(self.codes >= c.K):
            raise InvalidConfig("code component out of [0, K)")
        pad = self.flags == 0
        if np.any(self.items[pad] != PADDING_ITEM) or np.any(self.codes[pad] != 0):
            raise InvalidConfig("padding slots must be canonical zeros")
        if self.valid_count != c.N0:
            raise InvalidConfig(f"{self.valid_count} valid slots, expected N0={c.N0}")
        valid_items = self.items[~pad]
        if np.unique(valid_items).size != valid_items.size:
            raise InvalidConfig("duplicate item identifiers")
        if np.any(valid_items >= np.uint64(P)):
            raise InvalidConfig("item identifier is not a field element")
        if np.any(self.centroids < 0) or np.any(self.centroids > self.scale.coord_max):
            raise InvalidConfig("centroid coordinate outside the fixed-point range")
        if np.any(self.codebooks < 0) or np.any(self.codebooks > 2 * self.scale.residual_offset):
            raise InvalidConfig("codeword coordinate outside the residual range")

    def equals(self, other: "Snapshot") -> bool:
        return (
            self.config == other.config
            and self.scale == other.scale
            and self.field == other.field
            and all(np.array_equal(getattr(self, a), getattr(other, a))
                    for a in ("centroids", "flags", "items", "codes", "codebooks"))
        )

    def copy(self) -> "Snapshot":
        return Snapshot(self.config, self.scale, self.field, self.centroids.copy(),
                        self.flags.copy(), self.items.copy(), self.codes.copy(),
                        self.codebooks.copy(), self.report)


# ---------------------------------------------------------------------------
# k-means


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pairwise squared distances. Exact for integer inputs below 2^53."""
    pn = np.einsum("ij,ij->i", points, points)
    cn = np.einsum("ij,ij->i", centers, centers)
    d = pn[:, None] - 2.0 * (points @ centers.T) + cn[None, :]
    return np.maximum(d, 0.0)


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(points, points[chosen[0]][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(points, points[idx][None, :])[:, 0])
    return points[chosen].copy()


def kmeans(points, k: int, seed: int, max_iter: int = 25) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; returns float centers.

    An empty cluster takes over the point of the largest cluster that lies
    farthest from that cluster's center.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < k:
        raise TooFewVectors(f"{points.shape[0]} points for {k} clusters")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(points, k, rng)
    labels = None
    for _ in range(max_iter):
        dists = _sq_dists(points, centers)
        new_labels = np.argmin(dists, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            largest = int(np.argmax(counts))
            members = np.flatnonzero(new_labels == largest)
            far = members[np.argmax(dists[members, largest])]
            new_labels[far] = empty
            counts[largest] -= 1
            counts[empty] += 1
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        centers = sums / counts[:, None]
    return centers


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def train_centroids(vectors, n_list: int, seed: int, max_iter: int = 25) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.int64)
    if vectors.shape[0] < n_list:
        raise TooFewVectors(f"N0={vectors.shape[0]} < n_list={n_list}")
    return _round_half_away(kmeans(vectors, n_list, seed, max_iter))


def assign(vectors, centroids) -> list[list[int]]:
    """Nearest-centroid partition; ties go to the smallest centroid index."""
    vectors = np.asarray(vectors, dtype=np.int64)
    centroids = np.asarray(centroids, dtype=np.int64)
    if len(centroids) == 0:
        raise InvalidConfig("no centroids")
    if vectors.shape[1] != centroids.shape[1]:
        raise DimensionMismatch("vector and centroid dimensions differ")
    labels = np.argmin(_sq_dists(vectors.astype(np.float64), centroids.astype(np.float64)), axis=1)
    clusters: list[list[int]] = [[] for _ in range(len(centroids))]
    for v, lab in enumerate(labels):
        clusters[int(lab)].append(v)
    return clusters


def rebalance(clusters, centroids, n: int, vectors) -> tuple[list[list[int]], RebalanceReport]:
    """Enforce ``|cluster| <= n`` by greedy relocation to free clusters.

    Each outer round snapshots the overfull set O and the free set F,
    scores every member v of an overfull cluster i by
    ``dist(v, mu_t*) - dist(v, mu_i)`` with t* its nearest free cluster, and
    applies the moves in ascending score while the source is still
    overfull, the target still has room and v has not moved yet. Equal
    scores are ordered by (source cluster, vector index).
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    mu = np.asarray(centroids, dtype=np.float64)
    sets = [set(c) for c in clusters]
    sizes = [len(s) for s in sets]
    total = sum(sizes)
    if total > len(sets) * n:
        raise InfeasibleCapacity(f"{total} vectors exceed capacity {len(sets)} * {n}")
    moved = 0
    rounds = 0
    limit = max(1, len(sets) * total)
    while any(s > n for s in sizes):
        if rounds >= limit:
            raise RuntimeError("rebalancing exceeded its round bound")
        rounds += 1
        overfull = [i for i, s in enumerate(sizes) if s > n]
        free = np.array([t for t, s in enumerate(sizes) if s < n], dtype=np.int64)
        moves = []
        for i in overfull:
            members = np.array(sorted(sets[i]), dtype=np.int64)
            d_free = _sq_dists(vectors[members], mu[free])
            best = np.argmin(d_free, axis=1)
            d_own = _sq_dists(vectors[members], mu[i][None, :])[:, 0]
            delta = d_free[np.arange(len(members)), best] - d_own
            for v, t, dl in zip(members, free[best], delta):
                moves.append((int(round(dl)), i, int(v), int(t)))
        moves.sort()
        for _, i, v, t in moves:
            if sizes[i] > n and sizes[t] < n and v in sets[i]:
                sets[i].remove(v)
                sets[t].add(v)
                sizes[i] -= 1
                sizes[t] += 1
                moved += 1
    return [sorted(s) for s in sets], RebalanceReport(moved, rounds)


def pad_lists(clusters, items, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (flags, items, vector_index) arrays of shape (n_list, n).

    Valid slots come first in ascending vector index; padding slots carry
    item 0 and vector index -1.
    """
    n_list = len(clusters)
    flags = np.zeros((n_list, n), dtype=np.int64)
    slot_items = np.zeros((n_list, n), dtype=np.uint64)
    index = np.full((n_list, n), -1, dtype=np.int64)
    items = np.asarray(items, dtype=np.uint64)
    for i, members in enumerate(clusters):
        members = sorted(members)
        if len(members) > n:
            raise InfeasibleCapacity(f"list {i} holds {len(members)} > {n} vectors")
        flags[i, : len(members)] = 1
        index[i, : len(members)] = members
        slot_items[i, : len(members)] = items[members]
    return flags, slot_items, index


def split_blocks(residuals: np.ndarray, M: int) -> np.ndarray:
    """(N, D) -> (M, N, d)."""
    N, D = residuals.shape
    if D % M:
        raise DimensionMismatch(f"D={D} is not a multiple of M={M}")
    return residuals.reshape(N, M, D // M).transpose(1, 0, 2)


def train_pq(residuals, M: int, K: int, seed: int, max_iter: int = 25) -> np.ndarray:
    """Per-block k-means codebooks, shape (M, K, d), rounded to integers."""
    residuals = np.asarray(residuals, dtype=np.int64)
    if residuals.shape[0] < K:
        raise TooFewVectors(f"N0={residuals.shape[0]} < K={K}")
    blocks = split_blocks(residuals, M)
    seeds = np.random.SeedSequence(seed).generate_state(M)
    return np.stack([
        _round_half_away(kmeans(blocks[m], K, int(seeds[m]), max_iter)) for m in range(M)
    ])


def encode_pq(residuals, codebooks) -> np.ndarray:
    """Nearest codeword per block, ties to the smallest index; shape (N, M)."""
    residuals = np.atleast_2d(np.asarray(residuals, dtype=np.int64))
    codebooks = np.asarray(codebooks, dtype=np.int64)
    M = codebooks.shape[0]
    blocks = split_blocks(residuals, M)
    codes = np.empty((residuals.shape[0], M), dtype=np.int64)
    for m in range(M):
        d = _sq_dists(blocks[m].astype(np.float64), codebooks[m].astype(np.float64))
        codes[:, m] = np.argmin(d, axis=1)
    return codes


def build_snapshot(
    vectors,
    items,
    config: IvfPqConfig,
    seed: int,
    scale: FxScale,
    field: FieldSpec = FieldSpec(),
    max_iter: int = 25,
) -> Snapshot:
    """Shape encoded vectors (int matrix of shape (N0, D)) into a Snapshot."""
    vectors = np.asarray(vectors, dtype=np.int64)
    items = np.asarray(items, dtype=np.uint64)
    if vectors.ndim != 2 or vectors.shape != (config.N0, config.D):
        raise DimensionMismatch(f"expected vectors of shape ({config.N0}, {config.D})")
    if items.shape != (config.N0,):
        raise DimensionMismatch("one item identifier per vector is required")
    if np.unique(items).size != items.size:
        raise InvalidConfig("item identifiers must be unique")
    if np.any(vectors < 0) or np.any(vectors > scale.coord_max):
        raise InvalidConfig("vectors are not encoded under the given scale")
    check_static_bounds(config.D, scale, field)

    seeds = np.random.SeedSequence(seed).generate_state(2)
    centroids = train_centroids(vectors, config.n_list, int(seeds[0]), max_iter)
    centroids = np.clip(centroids, 0, scale.coord_max)
    clusters = assign(vectors, centroids)
    clusters, report = rebalance(clusters, centroids, config.n, vectors)
    flags, slot_items, index = pad_lists(clusters, items, config.n)

    owner = np.empty(config.N0, dtype=np.int64)
    for i, members in enumerate(clusters):
        owner[members] = i
    rho = scale.residual_offset
    residuals = vectors - centroids[owner]
    codebooks = train_pq(residuals, config.M, config.K, int(seeds[1]), max_iter)
    codebooks = np.clip(codebooks + rho, 0, 2 * rho)
    codes_by_vector = encode_pq(residuals + rho, codebooks)

    codes = np.zeros((config.n_list, config.n, config.M), dtype=np.int64)
    valid = index >= 0
    codes[valid] = codes_by_vector[index[valid]]
    snap = Snapshot(config, scale, field, centroids, flags, slot_items, codes, codebooks, report)
    snap.validate()
    return snap


def assemble_snapshot(config, scale, field, centroids, clusters, vectors, items, codebooks):
    """Snapshot from explicit centroids, partition and shifted codebooks."""
    vectors = np.asarray(vectors, dtype=np.int64)
    centroids = np.asarray(centroids, dtype=np.int64)
    codebooks = np.asarray(codebooks, dtype=np.int64)
    flags, slot_items, index = pad_lists(clusters, items, config.n)
    owner = np.empty(len(vectors), dtype=np.int64)
    for i, members in enumerate(clusters):
        owner[list(members)] = i
    residuals = vectors - centroids[owner] + scale.residual_offset
    codes_by_vector = encode_pq(residuals, codebooks)
    codes = np.zeros((config.n_list, config.n, config.M), dtype=np.int64)
    valid = index >= 0
    codes[valid] = codes_by_vector[index[valid]]
    snap = Snapshot(config, scale, field, centroids, flags, slot_items, codes, codebooks)
    snap.validate()
    return snap


# ---------------------------------------------------------------------------
# synthetic data


def gaussian_mixture(n_points: int, dim: int, n_components: int, seed: int,
                     spread: float = 1.0, center_scale: float = 4.0):
    """Seeded Gaussian mixture; returns (data, labels) as float32 / int64."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=center_scale, size=(n_components, dim))
    labels = rng.integers(n_components, size=n_points)
    data = centers[labels] + rng.normal(scale=spread, size=(n_points, dim))
    return data.astype(np.float32), labels.astype(np.int64)


def zero_snapshot(config: IvfPqConfig, scale: FxScale, field: FieldSpec) -> Snapshot:
    """Structurally valid snapshot whose first N0 slots are valid and all
    coordinates are zero; used to derive circuit shapes."""
    c = config
    flags = np.zeros((c.n_list, c.n), dtype=np.int64)
    flags.reshape(-1)[: c.N0] = 1
    items = np.zeros((c.n_list, c.n), dtype=np.uint64)
    items.reshape(-1)[: c.N0] = np.arange(1, c.N0 + 1, dtype=np.uint64)
    return Snapshot(c, scale, field, np.zeros((c.n_list, c.D)), flags, items,
                    np.zeros((c.n_list, c.n, c.M)), np.zeros((c.M, c.K, c.d)))


def log2_exact(x: int) -> int:
    return int(math.log2(x)) if is_power_of_two(x) else -1
