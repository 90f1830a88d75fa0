"""Shared instance generators for the tests."""

from __future__ import annotations

import numpy as np

from zkivf.fixedpoint import FieldSpec, FxScale
from zkivf.plonk.circuit import Circuit
from zkivf.shaping import IvfPqConfig, Snapshot

TINY = dict(N0=12, D=4, n_list=4, n_probe=2, n=4, M=2, K=2, k=2)


def random_snapshot(rng: np.random.Generator, n_list=4, n=4, D=4, M=2, K=2, k=2, n_probe=2,
                    N0=None, bits=4, signed=False, t_cmp=48) -> Snapshot:
    """Arbitrary structurally valid snapshot; valid slots sit at random positions."""
    N = n_list * n
    if N0 is None:
        N0 = int(rng.integers(max(1, k), N + 1)) if k <= N else N
    c = IvfPqConfig(N0=N0, D=D, n_list=n_list, n_probe=n_probe, n=n, M=M, K=K, k=k)
    scale = FxScale(v_max=1.0, bits=bits, signed=signed)
    field = FieldSpec(t_cmp=t_cmp)
    flags = np.zeros(N, dtype=np.int64)
    flags[rng.choice(N, size=N0, replace=False)] = 1
    flags = flags.reshape(n_list, n)
    items = np.zeros((n_list, n), dtype=np.uint64)
    ids = rng.choice(np.arange(1, 10 * N + 1), size=N0, replace=False).astype(np.uint64)
    items[flags == 1] = ids
    codes = rng.integers(0, K, size=(n_list, n, M))
    codes[flags == 0] = 0
    centroids = rng.integers(0, scale.coord_max + 1, size=(n_list, D))
    codebooks = rng.integers(0, 2 * scale.residual_offset + 1, size=(M, K, D // M))
    s = Snapshot(c, scale, field, centroids, flags, items, codes, codebooks)
    s.validate()
    return s


def random_query(rng: np.random.Generator, s: Snapshot) -> np.ndarray:
    return rng.integers(0, s.scale.coord_max + 1, size=s.config.D)


def satisfied(cs: Circuit, seed: int = 0) -> bool:
    """Direct constraint check with random challenge values."""
    rng = np.random.default_rng(seed)
    if cs.challenges:
        cs.set_challenges({name: int(rng.integers(1, 2**62)) for name in cs.challenges})
    return cs.is_satisfied()


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE: list[str] = []


def record(number: int, ok: bool, detail: str) -> bool:
    line = f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok
