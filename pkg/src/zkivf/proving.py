"""End-to-end query circuits, key generation, proofs and proof bundles.

Two circuit variants prove the same statement: "items is the top-k answer
of the fixed-shape query q over the snapshot committed as com".

``multiset``
    Sorting and table selection are checked rather than executed: sorted
    sequences are supplied as witness and tied to the originals with
    permutation arguments, ordering is checked with comparisons, and LUT
    selections are checked with one multiset inclusion.
``baseline``
    Sorting runs inside the circuit as bubble passes and every LUT
    selection is an indicator lookup.

Both share the commitment-binding subcircuit and the arithmetic kernels for
centroid distances and ADC tables. Public inputs are, in order, the two
commitment roots, the query coordinates and the k result items.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from . import gadgets as G
from . import poseidon
from .commitment import Commitment, ListOpening, commitment_tree, open_list
from .exceptions import (
    FingerprintMismatch, InvalidConfig, MalformedFile, MalformedProof, RangeViolation,
    WitnessInconsistent,
)
from .fixedpoint import FieldSpec, FxScale, FxVector, check_static_bounds
from .formats import PROOF_MAGIC, FORMAT_VERSION, Reader, Writer
from .plonk import system
from .plonk.circuit import Circuit
from .semantics import run_query
from .shaping import IvfPqConfig, Snapshot, zero_snapshot

VARIANTS = ("multiset", "baseline")
STEPS = ("public_inputs", "binding", "step1", "step2", "step3", "step4", "step5", "plumbing")


def bin_size(G: int) -> int:
    """Smallest power of two >= G."""
    if G < 1:
        raise ValueError("G must be positive")
    return 1 << (G - 1).bit_length()


# ---------------------------------------------------------------------------
# statement and witness


@dataclass(frozen=True)
class PublicInputs:
    com: Commitment
    q: tuple
    items: tuple

    def __post_init__(self):
        q = self.q.coords if isinstance(self.q, FxVector) else self.q
        object.__setattr__(self, "q", tuple(int(x) for x in q))
        object.__setattr__(self, "items", tuple(int(x) for x in self.items))

    def field_values(self) -> list[int]:
        return [self.com.root_mk, self.com.root_cb, *self.q, *self.items]


@dataclass
class WitnessBundle:
    """Everything the prover knows beyond the public inputs.

    Arrays may be edited to build deliberately inconsistent witnesses.
    """

    centroids: np.ndarray  # (n_list, D)
    list_roots: np.ndarray  # (n_list,)
    codebooks: np.ndarray  # (M, K, d)
    probe_sorted: np.ndarray  # (n_list, 2): (index, distance) in probe order
    openings: list  # ListOpening per probe rank
    selected: np.ndarray  # (n_sel, M) LUT entries chosen by each code
    topk_sorted: np.ndarray  # (n_sel, 2): (item, masked distance) in answer order

    @classmethod
    def from_snapshot(cls, s: Snapshot, q, tree=None) -> tuple["WitnessBundle", "object"]:
        """Run the query off-circuit and harvest its trace."""
        tree = tree or commitment_tree(s)
        res = run_query(q, s)
        tr = res.trace
        cands = tr.candidates
        order = tr.order
        topk = np.stack([cands.items.astype(object)[order],
                         cands.distances.astype(object)[order]], axis=1)
        w = cls(
            centroids=s.centroids.copy(),
            list_roots=np.asarray(tree.list_roots, dtype=np.uint64).copy(),
            codebooks=s.codebooks.copy(),
            probe_sorted=tr.probe_set.sorted_pairs.copy(),
            openings=[open_list(s, int(i), tree) for i in tr.probe_set.indices],
            selected=cands.selected.copy(),
            topk_sorted=topk,
        )
        return w, res


# ---------------------------------------------------------------------------
# circuit construction


class _Ctx:
    def __init__(self, cs: Circuit, config: IvfPqConfig, scale: FxScale, field: FieldSpec):
        self.cs, self.c, self.scale, self.field = cs, config, scale, field
        self.t = field.t_cmp

    def dist(self, xs, ys, ca=1, k=0) -> int:
        """sum_j (xs_j - ys_j)^2 with xs wires; ys wires."""
        cs = self.cs
        acc = None
        for x, y in zip(xs, ys):
            diff = cs.lin(x, ca, y, -1, k)
            sq = cs.mul(diff, diff)
            acc = sq if acc is None else cs.add(acc, sq)
        return acc


def _public_rows(cs: Circuit, c: IvfPqConfig, pub: PublicInputs):
    if len(pub.q) != c.D or len(pub.items) != c.k:
        raise InvalidConfig("public inputs do not match the configuration")
    with cs.step("public_inputs"):
        root_mk = cs.public_input(pub.com.root_mk, "root_mk")
        root_cb = cs.public_input(pub.com.root_cb, "root_cb")
        q = [cs.public_input(v, f"q[{j}]") for j, v in enumerate(pub.q)]
        items = [cs.public_input(v, f"item[{j}]") for j, v in enumerate(pub.items)]
    return root_mk, root_cb, q, items


def _bind_tables(ctx: _Ctx, w: WitnessBundle, root_mk: int, root_cb: int):
    """Codebook digest and the full list-head tree, recomputed in-circuit."""
    cs, c = ctx.cs, ctx.c
    cb = [cs.witness(int(v)) for v in np.asarray(w.codebooks).reshape(-1)]
    cs.assert_equal(G.poseidon_hash(cs, cb, poseidon.TAG_CODEBOOK), root_cb)
    cb = np.array(cb, dtype=object).reshape(c.M, c.K, c.d)
    mu = [[cs.witness(int(v)) for v in row] for row in np.asarray(w.centroids)]
    roots = [cs.witness(int(r)) for r in w.list_roots]
    heads = [G.poseidon_hash(cs, [G.Const(i), *mu[i], roots[i]], poseidon.TAG_LIST_HEAD)
             for i in range(c.n_list)]
    cs.assert_equal(G.merkle_root(cs, heads), root_mk)
    return cb, mu


def _bind_probe(ctx: _Ctx, op: ListOpening, i_wire: int, root_mk: int):
    """Open one probed list: returns (centroid wires, records as wire tuples)."""
    cs, c = ctx.cs, ctx.c
    mu = [cs.witness(v) for v in op.centroid]
    recs = []
    leaves = []
    for j, rec in enumerate(op.records):
        f = cs.witness(rec.f)
        item = cs.witness(rec.item)
        code = [cs.witness(v) for v in rec.code]
        leaves.append(G.poseidon_hash(cs, [i_wire, G.Const(j), f, item, *code], poseidon.TAG_LEAF))
        recs.append((f, item, code))
    root = G.merkle_root(cs, leaves)
    head = G.poseidon_hash(cs, [i_wire, *mu, root], poseidon.TAG_LIST_HEAD)
    path = [cs.witness(v) for v in op.auth_path]
    cs.assert_equal(G.merkle_open(cs, head, i_wire, path), root_mk)
    return mu, recs


def build_binding_subcircuit(config, scale, field, com: Commitment, w: WitnessBundle,
                             strict: bool = True) -> Circuit:
    """Stand-alone commitment check: codebooks, all list heads and every
    opened list in ``w`` must hash up to ``com``."""
    cs = Circuit()
    cs.strict = strict
    ctx = _Ctx(cs, config, scale, field)
    with cs.step("public_inputs"):
        root_mk = cs.public_input(com.root_mk, "root_mk")
        root_cb = cs.public_input(com.root_cb, "root_cb")
    with cs.step("binding"):
        _bind_tables(ctx, w, root_mk, root_cb)
        for op in w.openings:
            _bind_probe(ctx, op, cs.witness(op.i), root_mk)
    return cs


def _step1(ctx: _Ctx, q, mu):
    with ctx.cs.step("step1"):
        return [ctx.dist(q, row) for row in mu]


def _step2_multiset(ctx: _Ctx, w: WitnessBundle, dists, alpha, beta):
    cs, c, t = ctx.cs, ctx.c, ctx.t
    with cs.step("step2"):
        orig = [G.compress(cs, [cs.constant(i), d], beta) for i, d in enumerate(dists)]
        srt = [(cs.witness(int(i)), cs.witness(int(d))) for i, d in w.probe_sorted]
        G.set_eq(cs, orig, [G.compress(cs, pair, beta) for pair in srt], alpha)
        sd = [d for _, d in srt]
        for j in range(1, c.n_probe):
            G.assert_le(cs, sd[j - 1], sd[j], t)
        for j in range(c.n_probe, c.n_list):
            G.assert_le(cs, sd[c.n_probe - 1], sd[j], t)
        return [i for i, _ in srt[: c.n_probe]]


def _select_smallest(ctx: _Ctx, keys, payloads, count: int):
    """Stable selection of the ``count`` smallest keys by bubble passes.

    Descending passes over the reversed sequence sink the minimum to the
    end; equal keys are never exchanged, so earlier positions win ties.
    """
    keys = list(reversed(keys))
    cols = [list(reversed(p)) for p in payloads]
    for _ in range(count):
        keys, cols = G.bubble_pass(ctx.cs, keys, cols, ctx.t, descending=True)
    L = len(keys)
    return [keys[L - 1 - p] for p in range(count)], [[col[L - 1 - p] for p in range(count)]
                                                    for col in cols]


def _step2_baseline(ctx: _Ctx, dists):
    cs, c = ctx.cs, ctx.c
    with cs.step("step2"):
        idx = [cs.constant(i) for i in range(c.n_list)]
        _, (probe,) = _select_smallest(ctx, dists, [idx], c.n_probe)
        return probe


def _step3(ctx: _Ctx, q, opened, cb):
    cs, c = ctx.cs, ctx.c
    rho = ctx.scale.residual_offset
    luts = []
    with cs.step("step3"):
        for mu, _ in opened:
            resid = [cs.lin(qj, 1, mj, -1, rho) for qj, mj in zip(q, mu)]
            lut = [[ctx.dist(cb[m][k], resid[m * c.d:(m + 1) * c.d])
                    for k in range(c.K)] for m in range(c.M)]
            luts.append(lut)
    return luts


def _mask(ctx: _Ctx, f, parts):
    """f * sum(parts) + (1 - f) * d_max."""
    cs = ctx.cs
    dmax = ctx.field.d_max
    total = parts[0]
    for x in parts[1:]:
        total = cs.add(total, x)
    cs.assert_bool(f)
    return cs.arith(f, total, qM=1, qL=-dmax, qC=dmax)


def _step4_multiset(ctx: _Ctx, w: WitnessBundle, probe, opened, luts, alpha, beta):
    cs, c = ctx.cs, ctx.c
    sel = np.asarray(w.selected).reshape(c.n_probe, c.n, c.M)
    with cs.step("step4"):
        X, Y, chosen = [], [], []
        for p, (_, recs) in enumerate(opened):
            for m in range(c.M):
                for k in range(c.K):
                    Y.append((probe[p], cs.constant(m), cs.constant(k), luts[p][m][k]))
            row = []
            for j, (_, _, code) in enumerate(recs):
                ell = [cs.witness(int(sel[p, j, m])) for m in range(c.M)]
                for m in range(c.M):
                    X.append((probe[p], cs.constant(m), code[m], ell[m]))
                row.append(ell)
            chosen.append(row)
        pad = (cs.constant(c.n_list), cs.constant(0), cs.constant(0), cs.constant(ctx.field.d_max))
        M, K = c.M, c.K

        def key_of(cs_, tup):
            i, m, v, _ = tup
            return cs_.lin(cs_.lin(i, M * K, m, K), 1, v, 1)

        def key_value(vals):
            i, m, v, _ = vals
            return ((i * M + m) * K + v, vals)

        G.multiset_incl(cs, X, Y, alpha, beta, ctx.t, key_of, key_value, pad)
        cands = []
        for p, (_, recs) in enumerate(opened):
            for j, (f, item, _) in enumerate(recs):
                cands.append((item, _mask(ctx, f, chosen[p][j])))
    return cands


def _step4_baseline(ctx: _Ctx, opened, luts):
    cs, c = ctx.cs, ctx.c
    cands = []
    with cs.step("step4"):
        for p, (_, recs) in enumerate(opened):
            for f, item, code in recs:
                parts = [G.lookup(cs, luts[p][m], code[m]) for m in range(c.M)]
                cands.append((item, _mask(ctx, f, parts)))
    return cands


def _step5_multiset(ctx: _Ctx, w: WitnessBundle, cands, items, alpha, beta):
    cs, c, t = ctx.cs, ctx.c, ctx.t
    with cs.step("step5"):
        orig = [G.compress(cs, [it, d], beta) for it, d in cands]
        srt = [(cs.witness(int(it)), cs.witness(int(d))) for it, d in w.topk_sorted]
        G.set_eq(cs, orig, [G.compress(cs, pair, beta) for pair in srt], alpha)
        sd = [d for _, d in srt]
        for j in range(1, c.k):
            G.assert_le(cs, sd[j - 1], sd[j], t)
        for j in range(c.k, len(srt)):
            G.assert_le(cs, sd[c.k - 1], sd[j], t)
        for j in range(c.k):
            cs.assert_equal(srt[j][0], items[j])


def _step5_baseline(ctx: _Ctx, cands, items):
    cs, c = ctx.cs, ctx.c
    with cs.step("step5"):
        keys = [d for _, d in cands]
        vals = [it for it, _ in cands]
        _, (top,) = _select_smallest(ctx, keys, [vals], c.k)
        for j in range(c.k):
            cs.assert_equal(top[j], items[j])


def _check_shape(config: IvfPqConfig, scale: FxScale, field: FieldSpec):
    check_static_bounds(config.D, scale, field)
    bound = config.D * (2 * scale.residual_offset) ** 2
    if bound >= field.d_max:
        raise RangeViolation("valid candidate distances can reach d_max")
    if config.n_list * config.M * config.K >= field.half_range:
        raise RangeViolation("lookup keys exceed the comparison range")


def _build(variant: str, config, scale, field, pub: PublicInputs, w: WitnessBundle,
           strict: bool = True) -> Circuit:
    if variant not in VARIANTS:
        raise InvalidConfig(f"unknown variant {variant!r}")
    _check_shape(config, scale, field)
    cs = Circuit()
    cs.strict = strict
    ctx = _Ctx(cs, config, scale, field)
    root_mk, root_cb, q, items = _public_rows(cs, config, pub)
    with cs.step("binding"):
        cb, mu = _bind_tables(ctx, w, root_mk, root_cb)
    dists = _step1(ctx, q, mu)
    if variant == "multiset":
        alpha, beta = cs.challenge("alpha"), cs.challenge("beta")
        probe = _step2_multiset(ctx, w, dists, alpha, beta)
    else:
        probe = _step2_baseline(ctx, dists)
    with cs.step("binding"):
        opened = [_bind_probe(ctx, op, iw, root_mk) for op, iw in zip(w.openings, probe)]
    luts = _step3(ctx, q, opened, cb)
    if variant == "multiset":
        cands = _step4_multiset(ctx, w, probe, opened, luts, alpha, beta)
        _step5_multiset(ctx, w, cands, items, alpha, beta)
    else:
        cands = _step4_baseline(ctx, opened, luts)
        _step5_baseline(ctx, cands, items)
    return cs


def build_multiset_circuit(config, scale, field, pub: PublicInputs, w: WitnessBundle,
                           strict: bool = True) -> Circuit:
    return _build("multiset", config, scale, field, pub, w, strict)


def build_baseline_circuit(config, scale, field, pub: PublicInputs, w: WitnessBundle,
                           strict: bool = True) -> Circuit:
    return _build("baseline", config, scale, field, pub, w, strict)


def build_circuit(variant, config, scale, field, pub, w, strict=True) -> Circuit:
    return _build(variant, config, scale, field, pub, w, strict)


def dummy_instance(config: IvfPqConfig, scale: FxScale, field: FieldSpec):
    """A (snapshot, query) pair of the right shape, used for keygen and stats."""
    s = zero_snapshot(config, scale, field)
    return s, np.zeros(config.D, dtype=np.int64)


def instance(s: Snapshot, q) -> tuple[PublicInputs, WitnessBundle]:
    tree = commitment_tree(s)
    w, res = WitnessBundle.from_snapshot(s, q, tree)
    return PublicInputs(tree.commitment, tuple(np.asarray(
        q.coords if isinstance(q, FxVector) else q, dtype=np.int64)), res.items), w


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class CircuitStats:
    G: int
    G_B: int
    steps: dict
    plumbing: int
    domain: int
    gadgets: dict = dc_field(default_factory=dict)

    def breakdown_total(self) -> int:
        return sum(v for k, v in self.steps.items() if k != "plumbing")


def stats_of(cs: Circuit) -> CircuitStats:
    steps = {name: 0 for name in STEPS}
    steps.update(cs.meter.steps)
    steps["public_inputs"] = len(cs.publics)
    G_rows = cs.num_rows
    return CircuitStats(G=G_rows, G_B=bin_size(G_rows), steps=steps,
                        plumbing=steps.get("plumbing", 0),
                        domain=system.domain_size(G_rows),
                        gadgets={name: (cs.meter.instances.get(name, 0), g)
                                 for name, g in cs.meter.gates.items()})


def circuit_stats(config, scale, field=FieldSpec(), variant="multiset") -> CircuitStats:
    s, q = dummy_instance(config, scale, field)
    pub, w = instance(s, q)
    return stats_of(_build(variant, config, scale, field, pub, w))


# ---------------------------------------------------------------------------
# keys


def circuit_fingerprint(config: IvfPqConfig, scale: FxScale, field: FieldSpec, variant: str) -> bytes:
    h = hashlib.blake2b(digest_size=32, person=b"zkivf-circuit")
    h.update(system.BACKEND_ID)
    h.update(variant.encode())
    h.update(repr(sorted(config.as_dict().items())).encode())
    h.update(struct.pack("<dII", scale.v_max, scale.bits, int(scale.signed)))
    h.update(struct.pack("<II", field.modulus_bits, field.t_cmp))
    return h.digest()


@dataclass
class Keys:
    config: IvfPqConfig
    scale: FxScale
    field: FieldSpec
    variant: str
    fingerprint: bytes
    pk: system.ProvingKey
    stats: CircuitStats

    @property
    def vk(self) -> system.VerifyingKey:
        return self.pk.vk


_KEY_CACHE: dict[bytes, Keys] = {}


def keygen(config: IvfPqConfig, scale: FxScale, field: FieldSpec = FieldSpec(),
           variant: str = "multiset") -> Keys:
    """Proving and verifying keys for one circuit shape (cached per process)."""
    fp = circuit_fingerprint(config, scale, field, variant)
    keys = _KEY_CACHE.get(fp)
    if keys is None:
        s, q = dummy_instance(config, scale, field)
        pub, w = instance(s, q)
        cs = _build(variant, config, scale, field, pub, w)
        keys = Keys(config, scale, field, variant, fp, system.setup(cs), stats_of(cs))
        _KEY_CACHE[fp] = keys
    return keys


# ---------------------------------------------------------------------------
# bundles


@dataclass(frozen=True)
class ProofBundle:
    fingerprint: bytes
    public: PublicInputs
    proof: bytes

    def to_bytes(self) -> bytes:
        w = Writer()
        w.raw(PROOF_MAGIC)
        w.u32(FORMAT_VERSION)
        w.blob(self.fingerprint)
        w.blob(self.public.com.to_bytes())
        w.array(np.asarray(self.public.q, dtype=np.uint64))
        w.array(np.asarray(self.public.items, dtype=np.uint64))
        w.blob(self.proof)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProofBundle":
        try:
            r = Reader(data)
            r.header(PROOF_MAGIC)
            fp = r.blob()
            com = Commitment.from_bytes(r.blob())
            q = tuple(int(x) for x in r.array())
            items = tuple(int(x) for x in r.array())
            proof = r.blob()
            r.done()
        except (MalformedFile, ValueError) as exc:
            raise MalformedProof(str(exc)) from exc
        return cls(fp, PublicInputs(com, q, items), proof)

    def with_public(self, **changes) -> "ProofBundle":
        return replace(self, public=replace(self.public, **changes))


def prove(s: Snapshot, q, variant: str = "multiset", com: Commitment | None = None,
          keys: Keys | None = None, seed=None) -> ProofBundle:
    """Run the query, build the witness and prove the answer.

    When ``com`` is given the snapshot must commit to it.
    """
    keys = keys or keygen(s.config, s.scale, s.field, variant)
    if keys.variant != variant or keys.config != s.config:
        raise FingerprintMismatch("keys were generated for another circuit")
    pub, w = instance(s, q)
    if com is not None and com != pub.com:
        raise WitnessInconsistent("snapshot does not open the given commitment")
    cs = _build(variant, s.config, s.scale, s.field, pub, w)
    proof = system.prove(keys.pk, cs, seed=seed)
    return ProofBundle(keys.fingerprint, pub, proof.to_bytes())


def prove_with_witness(keys: Keys, pub: PublicInputs, w: WitnessBundle, seed=None,
                       strict: bool = True) -> ProofBundle:
    """Prove an explicitly supplied statement and witness (no query run)."""
    cs = _build(keys.variant, keys.config, keys.scale, keys.field, pub, w, strict)
    proof = system.prove(keys.pk, cs, seed=seed)
    return ProofBundle(keys.fingerprint, pub, proof.to_bytes())


def verify(bundle: ProofBundle, keys: Keys) -> bool:
    """Accept or reject a bundle against locally generated keys.

    Raises FingerprintMismatch when the bundle targets another circuit and
    MalformedProof when the proof bytes do not parse.
    """
    if bundle.fingerprint != keys.fingerprint:
        raise FingerprintMismatch("bundle was produced for a different circuit")
    pub = bundle.public
    c = keys.config
    if len(pub.q) != c.D or len(pub.items) != c.k:
        return False
    if any(not 0 <= x <= keys.scale.coord_max for x in pub.q):
        return False
    proof = system.Proof.from_bytes(bundle.proof)
    return system.verify(keys.vk, pub.field_values(), proof)


__all__ = [
    "VARIANTS", "PublicInputs", "WitnessBundle", "ProofBundle", "CircuitStats", "Keys",
    "build_binding_subcircuit", "build_multiset_circuit", "build_baseline_circuit",
    "build_circuit", "circuit_stats", "stats_of", "keygen", "prove", "prove_with_witness",
    "verify", "instance", "dummy_instance", "circuit_fingerprint", "bin_size",
]
