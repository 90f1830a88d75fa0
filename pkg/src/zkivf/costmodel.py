"""Analytic gate-count model, padded bins and the bin-pruned configuration search.

A variant's gate count is modelled as ``sum_j c_j * f_j(config)`` where the
features ``f_j`` are the dominant query-semantics terms plus the commitment
terms, and the constants ``c_j`` are fitted by non-negative least squares
against gate counts measured on real circuits (:func:`calibrate`).

Query terms (t = comparison width):

=================  ==========================  ==========================
term               multiset                    baseline
=================  ==========================  ==========================
centroid_dist      n_list * D                  n_list * D
probe_select       n_list * t                  n_probe * n_list * t
adc_tables         n_probe * K * D             n_probe * K * D
candidate_dist     t * n_probe * M * max(K,n)  n_probe * n * M * K
topk               n_probe * n * t             k * n_probe * n * t
=================  ==========================  ==========================

Commitment terms (shared): ``bind_codebook = K*D``,
``bind_lists = n_list*(D+4)`` (list heads and their tree),
``bind_slots = n_probe*n*(M+6)`` (slot leaves and list trees),
``bind_open = n_probe*(D + 2 + 2*log2(n_list))`` (head hash and path).
Public-input rows add ``public_io = D + k + 2``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import nnls

from .exceptions import InfeasibleBudgets, NonIntegralDerivedParam
from .shaping import IvfPqConfig, is_power_of_two

VARIANTS = ("multiset", "baseline")
QUERY_TERMS = ("centroid_dist", "probe_select", "adc_tables", "candidate_dist", "topk")
BIND_TERMS = ("bind_codebook", "bind_lists", "bind_slots", "bind_open")
TERMS = QUERY_TERMS + BIND_TERMS + ("public_io",)


def bin(G: int) -> int:  # noqa: A001 - mirrors the quantity's usual name
    """Smallest power of two >= G."""
    G = int(G)
    if G < 1:
        raise ValueError("G must be at least 1")
    return 1 << (G - 1).bit_length()


@dataclass(frozen=True)
class Shape:
    """The parameters a gate count depends on."""

    D: int
    n_list: int
    n_probe: int
    n: int
    M: int
    K: int
    k: int
    t_cmp: int = 48

    @classmethod
    def of(cls, config: IvfPqConfig, t_cmp: int = 48) -> "Shape":
        return cls(config.D, config.n_list, config.n_probe, config.n, config.M, config.K,
                   config.k, t_cmp)


@dataclass(frozen=True)
class Budgets:
    """Deployment budgets: capacity N, code budget B = M log2 K, probing
    ratio r = n_probe / n_list and the result size k."""

    N: int
    B: int
    r: float
    k: int = 10

    @property
    def N_sel(self) -> float:
        return self.r * self.N

    def derive(self, n_list: int, K: int) -> tuple[int, int, int]:
        """(n_probe, n, M) implied by a layout; raises NonIntegralDerivedParam."""
        n_probe = self.r * n_list
        if abs(n_probe - round(n_probe)) > 1e-9 or round(n_probe) < 1:
            raise NonIntegralDerivedParam(f"n_probe = r*n_list = {n_probe} is not a positive integer")
        if self.N % n_list:
            raise NonIntegralDerivedParam(f"n = N/n_list = {self.N / n_list} is not integral")
        if K < 2 or not is_power_of_two(K):
            raise NonIntegralDerivedParam(f"K={K} must be a power of two >= 2")
        log_k = K.bit_length() - 1
        if self.B % log_k:
            raise NonIntegralDerivedParam(f"M = B/log2 K = {self.B / log_k} is not integral")
        return int(round(n_probe)), self.N // n_list, self.B // log_k


def features(s: Shape, variant: str) -> dict[str, float]:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    t = s.t_cmp
    log_nl = math.log2(s.n_list)
    f = {
        "centroid_dist": s.n_list * s.D,
        "adc_tables": s.n_probe * s.K * s.D,
        "bind_codebook": s.K * s.D,
        "bind_lists": s.n_list * (s.D + 4),
        "bind_slots": s.n_probe * s.n * (s.M + 6),
        "bind_open": s.n_probe * (s.D + 2 + 2 * log_nl),
        "public_io": s.D + s.k + 2,
    }
    if variant == "multiset":
        f["probe_select"] = s.n_list * t
        f["candidate_dist"] = t * s.n_probe * s.M * max(s.K, s.n)
        f["topk"] = s.n_probe * s.n * t
    else:
        f["probe_select"] = s.n_probe * s.n_list * t
        f["candidate_dist"] = s.n_probe * s.n * s.M * s.K
        f["topk"] = s.k * s.n_probe * s.n * t
    return {name: float(f[name]) for name in TERMS}


@dataclass(frozen=True)
class GateEstimate:
    variant: str
    terms: dict
    G: float
    G_B: int

    def row(self) -> dict:
        return {"G": self.G, "G_B": self.G_B, **self.terms}


def estimate(shape: Shape, variant: str, constants: dict) -> GateEstimate:
    feats = features(shape, variant)
    c = constants[variant] if variant in constants else constants
    terms = {name: c.get(name, 0.0) * value for name, value in feats.items()}
    G = sum(terms.values())
    return GateEstimate(variant, terms, G, bin(max(1, math.ceil(G))))


def gate_count(D: int, n_list: int, K: int, budgets: Budgets, variant: str = "multiset",
               constants: dict | None = None, t_cmp: int = 48) -> GateEstimate:
    """Estimate G for the layout (n_list, K) under fixed budgets."""
    n_probe, n, M = budgets.derive(n_list, K)
    shape = Shape(D, n_list, n_probe, n, M, K, budgets.k, t_cmp)
    return estimate(shape, variant, DEFAULT_CONSTANTS if constants is None else constants)


# ---------------------------------------------------------------------------
# calibration


STEP_OF = {
    "centroid_dist": "step1", "probe_select": "step2", "adc_tables": "step3",
    "candidate_dist": "step4", "topk": "step5", "public_io": "public_inputs",
}


def fit_constants(samples: Iterable[tuple[Shape, str, dict]]) -> dict:
    """Per-term constants for each variant from measured per-step gate rows.

    ``samples`` holds (shape, variant, steps) where ``steps`` maps circuit
    step names to gate rows. Each query term is fitted against its own step
    and the commitment terms jointly against the binding rows, all by
    non-negative least squares with relative weights.
    """
    by_variant: dict[str, list] = {}
    for shape, variant, steps in samples:
        by_variant.setdefault(variant, []).append((features(shape, variant), steps))
    out = {}
    for variant, rows in by_variant.items():
        if len(rows) < 6:
            raise ValueError(f"need at least 6 measured circuits for {variant}, got {len(rows)}")
        consts = {}
        groups = [([name], STEP_OF[name]) for name in QUERY_TERMS + ("public_io",)]
        groups.append((list(BIND_TERMS), "binding"))
        for names, step in groups:
            A = np.array([[f[name] for name in names] for f, _ in rows])
            y = np.array([st.get(step, 0) for _, st in rows], dtype=float)
            w = 1.0 / np.maximum(y, 1.0)
            coef, _ = nnls(A * w[:, None], y * w)
            consts.update({name: float(v) for name, v in zip(names, coef)})
        out[variant] = {name: consts[name] for name in TERMS}
    return out


# (N0, D, n_list, n_probe, n, M, K, k), t_cmp
_CAL = [
    ((16, 4, 4, 2, 4, 2, 2, 2), 48),
    ((32, 4, 8, 1, 4, 1, 4, 1), 40),
    ((64, 8, 4, 2, 16, 4, 4, 4), 56),
    ((64, 8, 16, 2, 4, 2, 8, 2), 48),
    ((128, 16, 8, 4, 16, 4, 8, 8), 40),
    ((128, 8, 32, 1, 4, 8, 2, 1), 56),
    ((256, 8, 16, 2, 16, 2, 16, 16), 48),
    ((64, 16, 2, 1, 32, 8, 2, 8), 56),
    ((256, 4, 64, 4, 4, 4, 4, 4), 40),
    ((128, 8, 8, 2, 16, 2, 4, 6), 60),
]
# (config, t_cmp) pairs; t_cmp varies so comparison terms separate from hashing terms
CALIBRATION_SHAPES = [
    (IvfPqConfig(*p), t) for p, t in _CAL
]


def measure(config: IvfPqConfig, variant: str, t_cmp: int = 48, scale=None):
    """CircuitStats of the real circuit for one configuration."""
    from .fixedpoint import FieldSpec, FxScale
    from .proving import circuit_stats

    scale = scale or FxScale(v_max=1.0, bits=8, signed=True)
    return circuit_stats(config, scale, FieldSpec(t_cmp=t_cmp), variant)


def calibrate(pairs=None, variants=VARIANTS) -> dict:
    """Measure real circuits and fit the constants."""
    pairs = pairs or CALIBRATION_SHAPES
    samples = [(Shape.of(c, t), v, measure(c, v, t).steps) for c, t in pairs for v in variants]
    return fit_constants(samples)


# Fitted with calibrate() on CALIBRATION_SHAPES; refresh after circuit changes.
DEFAULT_CONSTANTS: dict = {
    "multiset": {
        "centroid_dist": 2.8465,
        "probe_select": 1.7016,
        "adc_tables": 2.7581,
        "candidate_dist": 2.7340,
        "topk": 1.9001,
        "bind_codebook": 192.9440,
        "bind_lists": 182.8718,
        "bind_slots": 181.1069,
        "bind_open": 124.6746,
        "public_io": 1.1502,
    },
    "baseline": {
        "centroid_dist": 2.8465,
        "probe_select": 1.7034,
        "adc_tables": 2.7581,
        "candidate_dist": 5.0976,
        "topk": 1.9382,
        "bind_codebook": 192.9440,
        "bind_lists": 182.8718,
        "bind_slots": 181.1069,
        "bind_open": 124.6746,
        "public_io": 1.0000,
    },
}


# ---------------------------------------------------------------------------
# bin-pruned search


@dataclass
class TuneResult:
    G_B_star: int
    n_list_star: int
    K_star: int
    grid: list = dc_field(default_factory=list)  # (n_list, K, G, G_B) evaluated points

    def table(self) -> str:
        lines = ["n_list,K,G,G_B"]
        lines += [f"{nl},{K},{G:.0f},{GB}" for nl, K, G, GB in self.grid]
        return "\n".join(lines)


def _start_layout(N: int, r: float) -> int:
    n_sel = r * N
    if n_sel <= 0 or abs(n_sel - round(n_sel)) > 1e-9:
        raise InfeasibleBudgets(f"scan budget r*N = {n_sel} is not a positive integer")
    n_list = N / round(n_sel)
    if abs(n_list - round(n_list)) > 1e-9:
        raise InfeasibleBudgets("N is not a multiple of the scan budget")
    return int(round(n_list))


def _check_candidates(B: int, K_candidates) -> list[int]:
    Ks = sorted(set(int(K) for K in K_candidates))
    if not Ks:
        raise InfeasibleBudgets("no codebook sizes to search")
    for K in Ks:
        if K < 2 or not is_power_of_two(K) or B % (K.bit_length() - 1):
            raise InfeasibleBudgets(f"K={K} is not a power of two dividing the code budget")
    return Ks


def pruned_search(N: int, B: int, r: float, n_list_max: int, K_candidates,
                  estimator: Callable[[int, int], float]) -> TuneResult:
    """Smallest padded bin and the largest (n_list, K) inside it.

    Starts from the smallest layout (one probed list), keeps the codebook
    sizes that reach the smallest bin, then doubles n_list while dropping
    every K whose bin grows past it.
    """
    Ks = _check_candidates(B, K_candidates)
    n_list = _start_layout(N, r)
    if n_list > n_list_max:
        raise InfeasibleBudgets("the smallest layout already exceeds n_list_max")
    grid = []

    def bin_at(nl, K):
        G = float(estimator(nl, K))
        GB = bin(max(1, math.ceil(G)))
        grid.append((nl, K, G, GB))
        return GB

    bins = {K: bin_at(n_list, K) for K in Ks}
    best = min(bins.values())
    alive = [K for K in Ks if bins[K] == best]
    star = (n_list, max(alive))
    while alive and n_list < n_list_max:
        n_list *= 2
        alive = [K for K in alive if bin_at(n_list, K) <= best]
        if alive:
            star = (n_list, max(alive))
    return TuneResult(best, star[0], star[1], grid)


def exhaustive_search(N: int, B: int, r: float, n_list_max: int, K_candidates,
                      estimator: Callable[[int, int], float]) -> TuneResult:
    """Evaluate every (n_list, K) on the doubling grid; pick the minimal bin
    and, inside it, the lexicographically largest (n_list, K)."""
    Ks = _check_candidates(B, K_candidates)
    n_list = _start_layout(N, r)
    grid = []
    while n_list <= n_list_max:
        for K in Ks:
            G = float(estimator(n_list, K))
            grid.append((n_list, K, G, bin(max(1, math.ceil(G)))))
        n_list *= 2
    if not grid:
        raise InfeasibleBudgets("empty search grid")
    best = min(GB for *_, GB in grid)
    nl, K = max((nl, K) for nl, K, _, GB in grid if GB == best)
    return TuneResult(best, nl, K, grid)


def model_estimator(D: int, budgets: Budgets, variant: str = "multiset",
                    constants: dict | None = None, t_cmp: int = 48):
    def est(n_list: int, K: int) -> float:
        return gate_count(D, n_list, K, budgets, variant, constants, t_cmp).G
    return est


# ---------------------------------------------------------------------------
# grids and timing


def grid_csv(D: int, budgets: Budgets, n_lists, Ks, variant: str = "multiset",
             constants: dict | None = None, t_cmp: int = 48) -> str:
    """CSV rows: n_list, K, n_probe, n, M, G, G_B and every term."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["n_list", "K", "n_probe", "n", "M", "G", "G_B", *TERMS])
    for n_list in n_lists:
        for K in Ks:
            try:
                n_probe, n, M = budgets.derive(n_list, K)
            except NonIntegralDerivedParam:
                continue
            e = gate_count(D, n_list, K, budgets, variant, constants, t_cmp)
            w.writerow([n_list, K, n_probe, n, M, round(e.G), e.G_B,
                        *[round(e.terms[name], 1) for name in TERMS]])
    return out.getvalue()


def fit_proving_time(G_B, seconds) -> tuple[float, float, float]:
    """Least-squares ``T = a * G_B log2 G_B + b``; returns (a, b, pearson r)."""
    x = np.array([g * math.log2(g) for g in G_B], dtype=float)
    y = np.asarray(seconds, dtype=float)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    r = float(np.corrcoef(x, y)[0, 1]) if len(x) > 1 and np.std(x) > 0 and np.std(y) > 0 else float("nan")
    return float(a), float(b), r


def is_discretely_unimodal(values) -> bool:
    """At most one strict local minimum when plateaus are merged."""
    v = [x for i, x in enumerate(values) if i == 0 or x != values[i - 1]]
    minima = sum(1 for i in range(len(v))
                 if (i == 0 or v[i - 1] > v[i]) and (i == len(v) - 1 or v[i + 1] > v[i]))
    return minima <= 1
