"""Desk-scale measurements: proof cost and retrieval utility."""

from __future__ import annotations

import math
import resource
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .fixedpoint import FieldSpec, FxScale, encode_matrix
from .shaping import IvfPqConfig, build_snapshot, gaussian_mixture, kmeans, split_blocks

# ---------------------------------------------------------------------------
# statistics


def mean_ci(xs) -> tuple[float, float]:
    """Mean and half-width of the two-sided 95% Student-t interval."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return float("nan"), float("nan")
    if xs.size == 1:
        return float(xs[0]), 0.0
    half = stats.t.ppf(0.975, xs.size - 1) * xs.std(ddof=1) / math.sqrt(xs.size)
    return float(xs.mean()), float(half)


def _fmt(mc) -> str:
    return f"{mc[0]:.4f} ± {mc[1]:.4f}"


def peak_rss_gib() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 2**20  # KiB on Linux


# ---------------------------------------------------------------------------
# proof cost


BENCH_COLUMNS = ("prove_s", "verify_s", "proof_kB", "memory_GiB", "G", "G_B")


@dataclass
class BenchRow:
    system: str
    prove_s: tuple
    verify_s: tuple
    proof_kB: tuple
    memory_GiB: tuple
    G: int
    G_B: int

    def cells(self) -> list[str]:
        return [_fmt(self.prove_s), _fmt(self.verify_s), _fmt(self.proof_kB),
                _fmt(self.memory_GiB), str(self.G), f"{self.G_B} (2^{self.G_B.bit_length() - 1})"]

    def format(self) -> str:
        return f"{self.system:<10} " + " | ".join(self.cells())


def synthetic_instance(config: IvfPqConfig, seed: int = 0, bits: int = 16,
                       field: FieldSpec = FieldSpec(), n_queries: int = 1):
    """Gaussian-mixture snapshot plus encoded queries for benchmarks."""
    data, _ = gaussian_mixture(config.N0 + n_queries, config.D, max(1, config.n_list), seed)
    scale = FxScale.fit(data, bits=bits)
    enc = encode_matrix(data, scale)
    items = np.arange(1, config.N0 + 1, dtype=np.uint64)
    s = build_snapshot(enc[: config.N0], items, config, seed, scale, field)
    return s, enc[config.N0:]


def bench_proofs(config: IvfPqConfig, variant: str = "multiset", reps: int = 5, seed: int = 0,
                 bits: int = 16, field: FieldSpec = FieldSpec()) -> BenchRow:
    from .proving import ProofBundle, keygen, prove, verify

    s, queries = synthetic_instance(config, seed, bits, field, n_queries=reps)
    keys = keygen(config, s.scale, field, variant)
    t_prove, t_verify, sizes, mem = [], [], [], []
    for r in range(reps):
        t0 = time.perf_counter()
        bundle = prove(s, queries[r], variant, keys=keys, seed=seed + r)
        t_prove.append(time.perf_counter() - t0)
        raw = bundle.to_bytes()
        t0 = time.perf_counter()
        ok = verify(ProofBundle.from_bytes(raw), keys)
        t_verify.append(time.perf_counter() - t0)
        if not ok:
            raise RuntimeError("an honest proof failed to verify")
        sizes.append(len(bundle.proof) / 1000)
        mem.append(peak_rss_gib())
    return BenchRow(variant, mean_ci(t_prove), mean_ci(t_verify), mean_ci(sizes), mean_ci(mem),
                    keys.stats.G, keys.stats.G_B)


# ---------------------------------------------------------------------------
# utility


def exact_knn(data: np.ndarray, queries: np.ndarray, k: int) -> np.ndarray:
    d = ((queries[:, None, :] - data[None, :, :]) ** 2).sum(axis=2)
    return np.argsort(d, axis=1, kind="stable")[:, :k]


class FloatIVFPQ:
    """Unconstrained floating-point IVF-PQ used as the utility reference."""

    def __init__(self, n_list, n_probe, M, K, seed=0, max_iter=25):
        self.n_list, self.n_probe, self.M, self.K = n_list, n_probe, M, K
        self.seed, self.max_iter = seed, max_iter

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        seeds = np.random.SeedSequence(self.seed).generate_state(2 + self.M)
        self.centroids = kmeans(X, self.n_list, int(seeds[0]), self.max_iter)
        d = ((X[:, None, :] - self.centroids[None]) ** 2).sum(axis=2)
        self.labels = np.argmin(d, axis=1)
        resid = X - self.centroids[self.labels]
        blocks = split_blocks(resid, self.M)
        self.codebooks = np.stack([kmeans(blocks[m], self.K, int(seeds[2 + m]), self.max_iter)
                                   for m in range(self.M)])
        self.codes = np.stack([
            np.argmin(((blocks[m][:, None, :] - self.codebooks[m][None]) ** 2).sum(axis=2), axis=1)
            for m in range(self.M)], axis=1)
        return self

    def search(self, q, k):
        q = np.asarray(q, dtype=np.float64)
        dc = ((self.centroids - q) ** 2).sum(axis=1)
        probes = np.argsort(dc, kind="stable")[: self.n_probe]
        ids, dists = [], []
        for i in probes:
            members = np.flatnonzero(self.labels == i)
            r = (q - self.centroids[i]).reshape(self.M, -1)
            lut = ((self.codebooks - r[:, None, :]) ** 2).sum(axis=2)  # (M, K)
            dd = lut[np.arange(self.M)[None, :], self.codes[members]].sum(axis=1)
            ids.append(members)
            dists.append(dd)
        ids = np.concatenate(ids)
        dists = np.concatenate(dists)
        order = np.argsort(dists, kind="stable")[:k]
        return ids[order]


def ranking_metrics(retrieved: np.ndarray, truth: np.ndarray, k: int = 10) -> dict:
    """Recall@k against the true top-k; Hit/MRR/NDCG@k with the single
    nearest neighbour as the relevant item."""
    recall, hit, mrr, ndcg = [], [], [], []
    for ret, gt in zip(retrieved, truth):
        ret = list(ret[:k])
        recall.append(len(set(ret) & set(gt[:k])) / k)
        rel = gt[0]
        if rel in ret:
            rank = ret.index(rel) + 1
            hit.append(1.0)
            mrr.append(1.0 / rank)
            ndcg.append(1.0 / math.log2(rank + 1))
        else:
            hit.append(0.0)
            mrr.append(0.0)
            ndcg.append(0.0)
    return {f"Recall@{k}": float(np.mean(recall)), f"Hit@{k}": float(np.mean(hit)),
            f"MRR@{k}": float(np.mean(mrr)), f"NDCG@{k}": float(np.mean(ndcg))}


def utility_comparison(n_points: int = 10_000, D: int = 16, n_list: int = 64, n_probe: int = 8,
                       M: int = 8, K: int = 16, k: int = 10, n_queries: int = 200,
                       n_components: int = 64, seed: int = 0, bits: int = 16) -> dict:
    """Recall and ranking metrics of the float reference and the fixed-shape
    fixed-point pipeline on the same synthetic data and configuration."""
    from .estimator import FixedShapeIVFPQ

    data, _ = gaussian_mixture(n_points + n_queries, D, n_components, seed)
    X, Q = data[:n_points].astype(np.float64), data[n_points:].astype(np.float64)
    truth = exact_knn(X, Q, k)

    ref = FloatIVFPQ(n_list, n_probe, M, K, seed).fit(X)
    std = np.stack([ref.search(q, k) for q in Q])

    est = FixedShapeIVFPQ(n_list=n_list, n_probe=n_probe, M=M, K=K, k=k, bits=bits, seed=seed)
    est.fit(X)
    zk = est.predict(Q).astype(np.int64) - 1  # identifiers are row index + 1

    out = {"std": ranking_metrics(std, truth, k), "zk": ranking_metrics(zk, truth, k),
           "moved": est.snapshot_.report.moved_count if est.snapshot_.report else 0,
           "n": est.config_.n}
    out["recall_delta"] = abs(out["std"][f"Recall@{k}"] - out["zk"][f"Recall@{k}"])
    return out
