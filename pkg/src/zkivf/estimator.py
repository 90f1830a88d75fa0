"""scikit-learn style wrapper around snapshot building, querying and proving."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .commitment import commit_snapshot
from .exceptions import DimensionMismatch, InvalidConfig
from .fixedpoint import FieldSpec, FxScale, encode_matrix
from .semantics import run_query
from .shaping import IvfPqConfig, build_snapshot, is_power_of_two


def _next_pow2(x: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(1, x))))


class FixedShapeIVFPQ(BaseEstimator):
    """Fixed-shape IVF-PQ index with provable queries.

    ``fit`` encodes the vectors to fixed point, trains the coarse quantizer
    and product quantizer, rebalances lists to capacity ``n`` and commits
    the snapshot. ``predict`` returns the top-k item identifiers per query,
    ``transform`` the matching distances. When ``n`` is None the smallest
    power of two that holds every vector is used.

    Queries are clipped to ``[-v_max, v_max]`` before encoding.
    """

    def __init__(self, n_list=8, n_probe=2, n=None, M=2, K=16, k=10, bits=16, t_cmp=48,
                 v_max=None, seed=0, max_iter=25):
        self.n_list = n_list
        self.n_probe = n_probe
        self.n = n
        self.M = M
        self.K = K
        self.k = k
        self.bits = bits
        self.t_cmp = t_cmp
        self.v_max = v_max
        self.seed = seed
        self.max_iter = max_iter

    def fit(self, X, y=None, items=None):
        X = check_array(X, dtype=np.float64)
        N0, D = X.shape
        if items is None:
            items = np.arange(1, N0 + 1, dtype=np.uint64)
        items = np.asarray(items, dtype=np.uint64)
        if items.shape != (N0,):
            raise DimensionMismatch("items must hold one identifier per row of X")
        if not is_power_of_two(self.n_list):
            raise InvalidConfig("n_list must be a power of two")
        n = self.n if self.n is not None else _next_pow2(math.ceil(N0 / self.n_list))
        self.config_ = IvfPqConfig(N0=N0, D=D, n_list=self.n_list, n_probe=self.n_probe, n=n,
                                   M=self.M, K=self.K, k=self.k)
        if self.v_max is None:
            self.scale_ = FxScale.fit(X, bits=self.bits)
        else:
            self.scale_ = FxScale(v_max=float(self.v_max), bits=self.bits,
                                  signed=bool(np.any(X < 0)))
        self.field_ = FieldSpec(t_cmp=self.t_cmp)
        self.snapshot_ = build_snapshot(encode_matrix(X, self.scale_), items, self.config_,
                                        self.seed, self.scale_, self.field_, self.max_iter)
        self.commitment_ = commit_snapshot(self.snapshot_)
        self.n_features_in_ = D
        return self

    def _encode_queries(self, Q) -> np.ndarray:
        check_is_fitted(self, "snapshot_")
        Q = check_array(Q, dtype=np.float64)
        if Q.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"queries have {Q.shape[1]} features, expected {self.n_features_in_}")
        lo = -self.scale_.v_max if self.scale_.signed else 0.0
        return encode_matrix(np.clip(Q, lo, self.scale_.v_max), self.scale_)

    def query(self, Q):
        return [run_query(q, self.snapshot_) for q in self._encode_queries(Q)]

    def predict(self, Q) -> np.ndarray:
        return np.stack([r.items for r in self.query(Q)])

    def transform(self, Q) -> np.ndarray:
        return np.stack([r.distances for r in self.query(Q)])

    def prove(self, q, variant: str = "multiset", seed=None):
        """ProofBundle for a single query vector."""
        from .proving import prove

        (qe,) = self._encode_queries(np.atleast_2d(q))
        return prove(self.snapshot_, qe, variant=variant, com=self.commitment_, seed=seed)

    def verify(self, bundle, variant: str = "multiset") -> bool:
        from .proving import keygen, verify

        check_is_fitted(self, "snapshot_")
        keys = keygen(self.config_, self.scale_, self.field_, variant)
        if bundle.public.com != self.commitment_:
            return False
        return verify(bundle, keys)
