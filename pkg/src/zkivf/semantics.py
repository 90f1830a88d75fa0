"""Reference executor for the fixed-shape five-step IVF-PQ query.

1. ``d_i = dist(q, mu_i)`` for every list.
2. Stable sort of ``(i, d_i)`` by distance then index; the first
   ``n_probe`` indices are probed.
3. For each probed list, ``LUT[i, m, k] = dist(C[m, k], (q - mu_i)_m + rho)``
   where ``rho`` is the residual offset codewords are stored under.
4. Every slot of every probed list becomes a candidate with masked distance
   ``f * sum_m LUT[i, m, code_m] + (1 - f) * d_max``.
5. Stable sort of the candidates by distance then candidate position
   (probe rank, slot); the first ``k`` items are the answer.

Ties are totalized by position, so the answer is unique. Inside a list,
valid slots follow ascending vector index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, DmaxTooSmall, InvalidConfig, RangeOverflow
from .fixedpoint import FxVector
from .shaping import Snapshot


@dataclass(frozen=True)
class ProbeSet:
    indices: np.ndarray  # (n_probe,)
    sorted_pairs: np.ndarray  # (n_list, 2): (index, distance)


@dataclass(frozen=True)
class AdcTables:
    probes: np.ndarray  # (n_probe,)
    lut: np.ndarray  # (n_probe, M, K)


@dataclass(frozen=True)
class CandidateList:
    items: np.ndarray  # (n_sel,) uint64
    distances: np.ndarray  # (n_sel,) masked distances
    provenance: np.ndarray  # (n_sel, 2): (list index, slot)
    selected: np.ndarray  # (n_sel, M): LUT entry picked by each code component
    flags: np.ndarray  # (n_sel,)


@dataclass(frozen=True)
class QueryTrace:
    centroid_distances: np.ndarray
    probe_set: ProbeSet
    tables: AdcTables
    candidates: CandidateList
    order: np.ndarray  # permutation of candidate positions, fully sorted


@dataclass(frozen=True)
class QueryResult:
    items: np.ndarray
    distances: np.ndarray
    trace: QueryTrace

    @property
    def item_list(self) -> list[int]:
        return [int(x) for x in self.items]


def _query_coords(q, D: int) -> np.ndarray:
    coords = q.coords if isinstance(q, FxVector) else np.asarray(q, dtype=np.int64)
    if coords.shape != (D,):
        raise DimensionMismatch(f"query has shape {coords.shape}, expected ({D},)")
    return coords.astype(np.int64)


def step1_centroid_distances(q, s: Snapshot) -> np.ndarray:
    qc = _query_coords(q, s.config.D)
    if np.any(qc < 0) or np.any(qc > s.scale.coord_max):
        raise RangeOverflow("query coordinate outside the fixed-point range")
    diff = s.centroids - qc[None, :]
    return np.einsum("ij,ij->i", diff, diff)


def step2_probe_select(distances, n_probe: int) -> ProbeSet:
    distances = np.asarray(distances, dtype=np.int64)
    if not 1 <= n_probe <= distances.shape[0]:
        raise InvalidConfig(f"n_probe={n_probe} outside [1, {distances.shape[0]}]")
    order = np.argsort(distances, kind="stable")
    pairs = np.stack([order, distances[order]], axis=1)
    return ProbeSet(indices=order[:n_probe].copy(), sorted_pairs=pairs)


def step3_adc_tables(q, s: Snapshot, probes: ProbeSet) -> AdcTables:
    c = s.config
    qc = _query_coords(q, c.D)
    rho = s.scale.residual_offset
    idx = np.asarray(probes.indices, dtype=np.int64)
    resid = qc[None, :] - s.centroids[idx] + rho  # (n_probe, D)
    if np.any(resid < 0) or np.any(resid > 2 * rho):
        raise RangeOverflow("residual query leaves the encodable range")
    blocks = resid.reshape(len(idx), c.M, 1, c.d)
    diff = s.codebooks[None, :, :, :] - blocks  # (n_probe, M, K, d)
    lut = np.einsum("pmkd,pmkd->pmk", diff, diff)
    return AdcTables(probes=idx, lut=lut)


def max_valid_distance(s: Snapshot) -> int:
    """Static bound on any valid candidate's approximate distance."""
    return s.config.D * (2 * s.scale.residual_offset) ** 2


def step4_candidate_distances(s: Snapshot, probes: ProbeSet, tables: AdcTables,
                              d_max: int | None = None) -> CandidateList:
    c = s.config
    if d_max is None:
        d_max = s.field.d_max
    if max_valid_distance(s) >= d_max:
        raise DmaxTooSmall(f"d_max={d_max} does not exceed the valid-distance bound")
    idx = np.asarray(probes.indices, dtype=np.int64)
    codes = s.codes[idx]  # (n_probe, n, M)
    p_ix = np.arange(len(idx))[:, None, None]
    m_ix = np.arange(c.M)[None, None, :]
    selected = tables.lut[p_ix, m_ix, codes]  # (n_probe, n, M)
    approx = selected.sum(axis=2)
    flags = s.flags[idx]
    masked = flags * approx + (1 - flags) * d_max
    prov = np.stack(np.meshgrid(idx, np.arange(c.n), indexing="ij"), axis=-1)
    return CandidateList(
        items=s.items[idx].reshape(-1),
        distances=masked.reshape(-1).astype(np.int64),
        provenance=prov.reshape(-1, 2),
        selected=selected.reshape(-1, c.M),
        flags=flags.reshape(-1),
    )


def step5_topk(candidates: CandidateList, k: int):
    n_sel = candidates.distances.shape[0]
    if not 1 <= k <= n_sel:
        raise InvalidConfig(f"k={k} outside [1, {n_sel}]")
    order = np.argsort(candidates.distances, kind="stable")
    top = order[:k]
    return candidates.items[top].copy(), candidates.distances[top].copy(), order


def run_query(q, s: Snapshot) -> QueryResult:
    d = step1_centroid_distances(q, s)
    probes = step2_probe_select(d, s.config.n_probe)
    tables = step3_adc_tables(q, s, probes)
    cands = step4_candidate_distances(s, probes, tables)
    items, dists, order = step5_topk(cands, s.config.k)
    return QueryResult(items, dists, QueryTrace(d, probes, tables, cands, order))
