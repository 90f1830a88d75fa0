"""Preprocessing, proving and verification.

Polynomials live on the subgroup H of size n (the trace domain). Committed
vectors are their evaluations on the coset ``7 * <w_{8n}>`` in bit-reversed
order. The prover commits, in order: the phase-1 wires, the phase-2 wires,
the permutation accumulator z and the three quotient chunks. Openings at an
out-of-domain point zeta (and z at omega*zeta) are tied to the commitments
by a DEEP quotient whose low degree is shown with FRI (folding arity 8).

Zero knowledge: every committed leaf is salted, and the last ``BLIND_ROWS``
rows of the trace are filled with random values that are linked by copy
cycles, so wires and z are randomized on more points than the proof reveals.
The quotient chunks are not blinded.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass

import numba
import numpy as np

from ..exceptions import MalformedProof, UnsatisfiedConstraint
from ..field import (
    P, _add, _mul, _sub, batch_inverse, bit_reverse_permute, coset_intt, coset_ntt,
    eval_coeffs, intt, inv, powers, root_of_unity, vadd, vadd_scalar, vmul, vscale, vsub,
)
from .circuit import NONE, Circuit
from .merkle import LEAF_WIDTH, SALT, MerkleTree, verify_leaf
from .transcript import Transcript

BLOWUP = 8
FOLD = 8
FINAL_MAX = 64
NUM_QUERIES = 28
SHIFT = 7  # LDE coset shift
K1, K2 = 7, 49  # coset multipliers separating the three wire columns in sigma
BLIND_ROWS = NUM_QUERIES * LEAF_WIDTH + 2
N_PRE = 11  # qL qR qO qM qC phA phB phC sA sB sC
N_OPEN = N_PRE + 3 + 3 + 1 + 3
BACKEND_ID = b"plonk3-goldilocks-fri8x8-q28"


def domain_size(rows: int) -> int:
    n = 1
    while n < rows + BLIND_ROWS:
        n *= 2
    return max(n, FOLD * FINAL_MAX)


def _br_index(i: int, bits: int) -> int:
    return int(format(i, f"0{bits}b")[::-1], 2) if bits else 0


# ---------------------------------------------------------------------------
# keys


@dataclass
class VerifyingKey:
    n: int
    n_pub: int
    public_labels: tuple
    pre_root: bytes
    structure: bytes

    @property
    def digest(self) -> bytes:
        h = hashlib.blake2b(digest_size=32, person=b"zkivf-vk")
        h.update(BACKEND_ID)
        h.update(struct.pack("<QQ", self.n, self.n_pub))
        h.update(repr(self.public_labels).encode())
        h.update(self.pre_root)
        h.update(self.structure)
        return h.digest()

    @property
    def challenge_names(self) -> list[str]:
        return [lab.split(":", 1)[1] for lab in self.public_labels if lab.startswith("challenge:")]


@dataclass
class ProvingKey:
    vk: VerifyingKey
    pre_evals: np.ndarray  # (N_PRE, n) on H
    pre_coeffs: np.ndarray  # (N_PRE, n)
    pre_lde: np.ndarray  # (N_PRE, 8n) natural order
    pre_tree: MerkleTree
    blind_pairs: np.ndarray  # (BLIND_ROWS-1,) row indices of the linked blinding cells
    rows: int


def _sigma_and_phase(circuit: Circuit, n: int):
    wires, sel = circuit.layout()
    rows = wires.shape[1]
    roots = circuit.var_roots()
    phases = np.array(circuit.phase, dtype=np.int64)
    cls = np.full((3, n), -1, dtype=np.int64)
    used = wires >= 0
    cls[:, :rows] = np.where(used, roots[np.maximum(wires, 0)], -1)
    ph = np.zeros((3, n), dtype=np.uint64)
    ph[:, :rows] = np.where(used, phases[np.maximum(wires, 0)] == 2, 0).astype(np.uint64)
    start = n - BLIND_ROWS
    ph[:, start:] = 1
    base = len(circuit.values)
    for j in range(BLIND_ROWS - 1):
        cls[0, start + j] = base + j
        cls[1, start + j + 1] = base + j

    flat = cls.reshape(-1)
    perm = np.arange(3 * n, dtype=np.int64)
    cells = np.flatnonzero(flat >= 0)
    order = cells[np.argsort(flat[cells], kind="stable")]
    keys = flat[order]
    if len(order):
        nxt = np.empty_like(order)
        nxt[:-1] = order[1:]
        boundary = np.flatnonzero(np.diff(keys)) + 1
        starts = np.concatenate([[0], boundary])
        ends = np.concatenate([boundary, [len(order)]])
        nxt[ends - 1] = order[starts]
        perm[order] = nxt
    omega_pows = powers(np.uint64(root_of_unity(n)), n)
    ids = np.concatenate([omega_pows, vmul(omega_pows, np.full(n, K1, dtype=np.uint64)),
                          vmul(omega_pows, np.full(n, K2, dtype=np.uint64))])
    sigma = ids[perm].reshape(3, n)
    sel_full = np.zeros((5, n), dtype=np.uint64)
    sel_full[:, :rows] = sel
    return sel_full, ph, sigma, rows


def _lde(coeffs: np.ndarray, n: int) -> np.ndarray:
    return coset_ntt(coeffs, SHIFT, BLOWUP * n)


def setup(circuit: Circuit) -> ProvingKey:
    """Preprocess a circuit's structure; witness values are ignored."""
    n = domain_size(circuit.num_rows)
    sel, ph, sigma, rows = _sigma_and_phase(circuit, n)
    pre_evals = np.concatenate([sel, ph, sigma]).astype(np.uint64)
    pre_coeffs = np.stack([intt(row) for row in pre_evals])
    pre_lde = np.stack([_lde(c, n) for c in pre_coeffs])
    tree = MerkleTree([bit_reverse_permute(row) for row in pre_lde])
    vk = VerifyingKey(n=n, n_pub=len(circuit.publics),
                      public_labels=tuple(lab for _, lab in circuit.publics),
                      pre_root=tree.root, structure=circuit.structure_digest())
    start = n - BLIND_ROWS
    return ProvingKey(vk, pre_evals, pre_coeffs, pre_lde, tree, np.arange(start, n), rows)


# ---------------------------------------------------------------------------
# proof object


@dataclass
class QueryOpening:
    trace: list  # per tree: (values (8, width) uint64, salt bytes, path list[bytes])
    layers: list  # per committed FRI layer: (values (8, 1) uint64, path)


@dataclass
class Proof:
    roots: list  # w1, w2, z, t
    evals: list  # N_OPEN values at zeta
    z_next: int  # z at omega * zeta
    fri_roots: list
    final_poly: list
    queries: list

    def to_bytes(self) -> bytes:
        out = bytearray()
        for r in self.roots:
            out += r
        out += struct.pack(f"<{N_OPEN}Q", *self.evals)
        out += struct.pack("<Q", self.z_next)
        out += struct.pack("<I", len(self.fri_roots))
        for r in self.fri_roots:
            out += r
        out += struct.pack("<I", len(self.final_poly))
        out += struct.pack(f"<{len(self.final_poly)}Q", *self.final_poly)
        out += struct.pack("<I", len(self.queries))
        for q in self.queries:
            for values, salt, path in q.trace:
                out += struct.pack("<I", values.size) + values.astype("<u8").tobytes()
                out += struct.pack("<I", len(salt)) + salt
                out += struct.pack("<I", len(path)) + b"".join(path)
            for values, path in q.layers:
                out += values.astype("<u8").tobytes()
                out += struct.pack("<I", len(path)) + b"".join(path)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes, widths=(N_PRE, 3, 3, 1, 3)) -> "Proof":
        pos = 0

        def take(k):
            nonlocal pos
            if pos + k > len(data):
                raise MalformedProof("truncated proof")
            chunk = data[pos : pos + k]
            pos += k
            return chunk

        def u32():
            return struct.unpack("<I", take(4))[0]

        roots = [take(32) for _ in range(4)]
        evals = list(struct.unpack(f"<{N_OPEN}Q", take(8 * N_OPEN)))
        z_next = struct.unpack("<Q", take(8))[0]
        fri_roots = [take(32) for _ in range(u32())]
        n_final = u32()
        if n_final > FINAL_MAX:
            raise MalformedProof("final polynomial too long")
        final_poly = list(struct.unpack(f"<{n_final}Q", take(8 * n_final)))
        n_q = u32()
        if n_q != NUM_QUERIES:
            raise MalformedProof("wrong number of queries")
        queries = []
        for _ in range(n_q):
            trace = []
            for w in widths:
                size = u32()
                if size != LEAF_WIDTH * w:
                    raise MalformedProof("leaf width mismatch")
                values = np.frombuffer(take(8 * size), dtype="<u8").reshape(LEAF_WIDTH, w).astype(np.uint64)
                salt = take(u32())
                n_path = u32()
                if n_path > 40:
                    raise MalformedProof("path too long")
                path = [take(32) for _ in range(n_path)]
                trace.append((values, salt, path))
            layers = []
            for _ in fri_roots:
                values = np.frombuffer(take(8 * LEAF_WIDTH), dtype="<u8").reshape(LEAF_WIDTH, 1).astype(np.uint64)
                n_path = u32()
                if n_path > 40:
                    raise MalformedProof("path too long")
                layers.append((values, [take(32) for _ in range(n_path)]))
            queries.append(QueryOpening(trace, layers))
        if pos != len(data):
            raise MalformedProof("trailing bytes in proof")
        if any(v >= P for v in evals) or z_next >= P or any(v >= P for v in final_poly):
            raise MalformedProof("non-canonical field element")
        return cls(roots, evals, z_next, fri_roots, final_poly, queries)


# ---------------------------------------------------------------------------
# numba kernels for the quotient and DEEP evaluations


@numba.njit(cache=True)
def _quotient_kernel(pre, w, z, pi, xs, zh_inv, l0, beta, gamma, k1, k2, lam, shift_idx):
    N = xs.shape[0]
    out = np.empty(N, dtype=np.uint64)
    one = np.uint64(1)
    lam2 = _mul(lam, lam)
    lam3 = _mul(lam2, lam)
    lam4 = _mul(lam3, lam)
    lam5 = _mul(lam4, lam)
    for i in range(N):
        a = _add(w[0, i], w[3, i])
        b = _add(w[1, i], w[4, i])
        c = _add(w[2, i], w[5, i])
        g = _mul(_mul(pre[3, i], a), b)
        g = _add(g, _mul(pre[0, i], a))
        g = _add(g, _mul(pre[1, i], b))
        g = _add(g, _mul(pre[2, i], c))
        g = _add(g, pre[4, i])
        g = _add(g, pi[i])
        pa = _mul(_sub(one, pre[5, i]), w[3, i])
        pb = _mul(_sub(one, pre[6, i]), w[4, i])
        pc = _mul(_sub(one, pre[7, i]), w[5, i])
        x = xs[i]
        bx = _mul(beta, x)
        num = _add(_add(a, bx), gamma)
        num = _mul(num, _add(_add(b, _mul(k1, bx)), gamma))
        num = _mul(num, _add(_add(c, _mul(k2, bx)), gamma))
        den = _add(_add(a, _mul(beta, pre[8, i])), gamma)
        den = _mul(den, _add(_add(b, _mul(beta, pre[9, i])), gamma))
        den = _mul(den, _add(_add(c, _mul(beta, pre[10, i])), gamma))
        zn = z[(i + shift_idx) % N]
        perm = _sub(_mul(zn, den), _mul(z[i], num))
        init = _mul(l0[i], _sub(z[i], one))
        acc = g
        acc = _add(acc, _mul(lam, pa))
        acc = _add(acc, _mul(lam2, pb))
        acc = _add(acc, _mul(lam3, pc))
        acc = _add(acc, _mul(lam4, perm))
        acc = _add(acc, _mul(lam5, init))
        out[i] = _mul(acc, zh_inv[i])
    return out


@numba.njit(cache=True)
def _deep_kernel(polys, vals, mus, inv1, zcol, z_next, mu_last, inv2):
    N = polys.shape[1]
    out = np.empty(N, dtype=np.uint64)
    for i in range(N):
        acc = np.uint64(0)
        for j in range(polys.shape[0]):
            acc = _add(acc, _mul(mus[j], _sub(polys[j, i], vals[j])))
        acc = _mul(acc, inv1[i])
        extra = _mul(_mul(mu_last, _sub(zcol[i], z_next)), inv2[i])
        out[i] = _add(acc, extra)
    return out


@numba.njit(cache=True)
def _grand_product(num, den_inv):
    n = num.shape[0]
    z = np.empty(n, dtype=np.uint64)
    z[0] = np.uint64(1)
    for i in range(n - 1):
        z[i + 1] = _mul(_mul(z[i], num[i]), den_inv[i])
    return z


@numba.njit(cache=True)
def _fold_coeffs(coeffs, beta, arity):
    m = coeffs.shape[0] // arity
    out = np.zeros(m, dtype=np.uint64)
    bp = np.uint64(1)
    for t in range(arity):
        for i in range(m):
            out[i] = _add(out[i], _mul(bp, coeffs[i * arity + t]))
        bp = _mul(bp, beta)
    return out


# ---------------------------------------------------------------------------
# helpers shared by prover and verifier


def _transcript(vk: VerifyingKey, inputs: list[int]) -> Transcript:
    t = Transcript(BACKEND_ID)
    t.absorb(b"vk", vk.digest)
    t.absorb_ints(b"public", inputs)
    return t


def _sample_zeta(t: Transcript, n: int) -> int:
    big = BLOWUP * n
    shift_pow = pow(SHIFT, big, P)
    while True:
        zeta = t.challenge(b"zeta")
        if pow(zeta, n, P) != 1 and pow(zeta, big, P) != shift_pow and zeta != 0:
            return zeta


def _fri_rounds(n: int) -> int:
    rounds, bound = 0, n
    while bound > FINAL_MAX:
        bound //= FOLD
        rounds += 1
    return rounds


def _public_values(vk: VerifyingKey, inputs: list[int], challenges: dict[str, int]) -> list[int]:
    vals = []
    it = iter(inputs)
    for lab in vk.public_labels:
        if lab.startswith("challenge:"):
            vals.append(challenges[lab.split(":", 1)[1]])
        else:
            vals.append(next(it))
    return vals


# ---------------------------------------------------------------------------
# prover


class _Rng:
    def __init__(self, seed):
        self._gen = None if seed is None else np.random.default_rng(seed)

    def bytes(self, k: int) -> bytes:
        return os.urandom(k) if self._gen is None else self._gen.bytes(k)

    def field(self, k: int) -> np.ndarray:
        raw = np.frombuffer(self.bytes(8 * k), dtype=np.uint64).copy()
        return raw % np.uint64(P)


def _commit(rows_natural: list[np.ndarray], rng: _Rng) -> MerkleTree:
    cols = [bit_reverse_permute(r) for r in rows_natural]
    return MerkleTree(cols, salts=rng.bytes(SALT * (cols[0].shape[0] // LEAF_WIDTH)))


def prove(pk: ProvingKey, circuit: Circuit, seed=None, check: bool = True) -> Proof:
    """Prove a fully built circuit whose phase-1 values are assigned.

    Challenge variables are filled in from the transcript; phase-2 values
    are derived from their recipes.
    """
    vk = pk.vk
    n = vk.n
    N = BLOWUP * n
    rng = _Rng(seed)
    if circuit.structure_digest() != vk.structure:
        raise UnsatisfiedConstraint("circuit structure differs from the proving key")
    wires, _ = circuit.layout()
    rows = wires.shape[1]
    start = n - BLIND_ROWS

    t = _transcript(vk, circuit.input_values())

    # blinding values; linked cells share a value
    blind_link = rng.field(BLIND_ROWS - 1)
    blind_free = rng.field(BLIND_ROWS + 2)
    blind_vals = np.zeros((3, BLIND_ROWS), dtype=np.uint64)
    blind_vals[0, :-1] = blind_link
    blind_vals[1, 1:] = blind_link
    blind_vals[0, -1] = blind_free[0]
    blind_vals[1, 0] = blind_free[1]
    blind_vals[2, :] = blind_free[2:]
    blind_w1 = rng.field(3 * BLIND_ROWS).reshape(3, BLIND_ROWS)
    blind_w2 = vsub(blind_vals.reshape(-1), blind_w1.reshape(-1)).reshape(3, BLIND_ROWS)

    phases = np.array(circuit.phase, dtype=np.int64)
    used = wires >= 0
    cell_phase = np.where(used, phases[np.maximum(wires, 0)], 1)

    def wire_evals(phase: int) -> np.ndarray:
        vals = np.array([0 if v is None else v for v in circuit.values], dtype=np.uint64)
        out = np.zeros((3, n), dtype=np.uint64)
        cell_vals = np.where(used, vals[np.maximum(wires, 0)], 0).astype(np.uint64)
        out[:, :rows] = np.where(cell_phase == phase, cell_vals, 0)
        out[:, start:] = blind_w1 if phase == 1 else blind_w2
        return out

    # round 1: phase-1 wires
    w1 = wire_evals(1)
    w1_coeffs = [intt(r) for r in w1]
    w1_lde = [_lde(c, n) for c in w1_coeffs]
    tree1 = _commit(w1_lde, rng)
    t.absorb(b"w1", tree1.root)
    challenges = {name: t.challenge(b"gadget:" + name.encode()) for name in vk.challenge_names}
    circuit.set_challenges(challenges)
    if check:
        circuit.check()

    # round 2: phase-2 wires
    w2 = wire_evals(2)
    w2_coeffs = [intt(r) for r in w2]
    w2_lde = [_lde(c, n) for c in w2_coeffs]
    tree2 = _commit(w2_lde, rng)
    t.absorb(b"w2", tree2.root)
    beta = t.challenge(b"beta")
    gamma = t.challenge(b"gamma")

    # round 3: permutation accumulator
    wsum = np.stack([vadd(w1[j], w2[j]) for j in range(3)])
    omega = root_of_unity(n)
    om = powers(np.uint64(omega), n)
    b64, g64 = np.uint64(beta), np.uint64(gamma)
    pre_evals_sigma = pk.pre_evals[8:11]
    num = np.ones(n, dtype=np.uint64)
    den = np.ones(n, dtype=np.uint64)
    for j, k in enumerate((1, K1, K2)):
        ids = vmul(om, np.full(n, k, dtype=np.uint64))
        num = vmul(num, _affine(wsum[j], ids, b64, g64))
        den = vmul(den, _affine(wsum[j], pre_evals_sigma[j], b64, g64))
    z = _grand_product(num, batch_inverse(den))
    z_coeffs = intt(z)
    z_lde = _lde(z_coeffs, n)
    tree3 = _commit([z_lde], rng)
    t.absorb(b"z", tree3.root)
    lam = t.challenge(b"lambda")

    # round 4: quotient
    pub_vals = _public_values(vk, circuit.input_values(), challenges)
    pi = np.zeros(n, dtype=np.uint64)
    pi[: vk.n_pub] = [(-v) % P for v in pub_vals]
    pi_lde = _lde(intt(pi), n)
    xs = vmul(powers(np.uint64(root_of_unity(N)), N), np.full(N, SHIFT, dtype=np.uint64))
    zh = _zh_on_coset(n)
    zh_inv = batch_inverse(zh)
    l0 = vmul(zh, batch_inverse(vscale(vadd_scalar(xs, np.uint64(P - 1)), np.uint64(n))))
    wl = np.stack(w1_lde + w2_lde)
    quot = _quotient_kernel(pk.pre_lde, wl, z_lde, pi_lde, xs, zh_inv, l0, b64, g64,
                            np.uint64(K1), np.uint64(K2), np.uint64(lam), BLOWUP)
    q_coeffs = coset_intt(quot, SHIFT)
    if np.any(q_coeffs[3 * n :]):
        raise UnsatisfiedConstraint("quotient degree too high; the witness is not satisfying")
    t_coeffs = [q_coeffs[j * n : (j + 1) * n].copy() for j in range(3)]
    t_lde = [_lde(c, n) for c in t_coeffs]
    tree4 = _commit(t_lde, rng)
    t.absorb(b"t", tree4.root)
    zeta = _sample_zeta(t, n)

    # openings
    all_coeffs = list(pk.pre_coeffs) + w1_coeffs + w2_coeffs + [z_coeffs] + t_coeffs
    evals = [eval_coeffs(c, zeta) for c in all_coeffs]
    z_next = eval_coeffs(z_coeffs, zeta * omega % P)
    t.absorb_ints(b"evals", evals + [z_next])
    mu = t.challenge(b"deep")

    # DEEP quotient
    polys = np.concatenate([pk.pre_lde, wl, z_lde[None, :], np.stack(t_lde)])
    mus = powers(np.uint64(mu), N_OPEN + 1)
    inv1 = batch_inverse(vadd_scalar(xs, np.uint64(P - zeta)))
    inv2 = batch_inverse(vadd_scalar(xs, np.uint64(P - zeta * omega % P)))
    deep = _deep_kernel(polys, np.array(evals, dtype=np.uint64), mus[:N_OPEN], inv1,
                        z_lde, np.uint64(z_next), mus[N_OPEN], inv2)
    coeffs = coset_intt(deep, SHIFT)
    if np.any(coeffs[n:]):
        raise UnsatisfiedConstraint("DEEP polynomial exceeds the degree bound")
    coeffs = coeffs[:n].copy()

    # FRI commit phase
    rounds = _fri_rounds(n)
    layer_trees = []
    shift = SHIFT
    size = N
    for r in range(rounds):
        fb = t.challenge(b"fold")
        coeffs = _fold_coeffs(coeffs, np.uint64(fb), FOLD)
        shift = pow(shift, FOLD, P)
        size //= FOLD
        if r < rounds - 1:
            evals_layer = bit_reverse_permute(coset_ntt(coeffs, shift, size))
            tree = MerkleTree([evals_layer])
            layer_trees.append(tree)
            t.absorb(b"fri", tree.root)
    final_poly = [int(c) for c in coeffs]
    t.absorb_ints(b"final", final_poly)

    # queries
    trees = [pk.pre_tree, tree1, tree2, tree3, tree4]
    queries = []
    for _ in range(NUM_QUERIES):
        q0 = t.challenge_index(b"query", n)
        trace = [tree.open(q0) for tree in trees]
        layers = []
        pos = q0
        for tree in layer_trees:
            values, _, path = tree.open(pos // LEAF_WIDTH)
            layers.append((values, path))
            pos //= LEAF_WIDTH
        queries.append(QueryOpening(trace, layers))
    return Proof([tree1.root, tree2.root, tree3.root, tree4.root], evals, z_next,
                 [tr.root for tr in layer_trees], final_poly, queries)


def _affine(w, ids, beta, gamma):
    return _affine_kernel(w, ids, beta, gamma)


@numba.njit(cache=True)
def _affine_kernel(w, ids, beta, gamma):
    out = np.empty_like(w)
    for i in range(w.shape[0]):
        out[i] = _add(_add(w[i], _mul(beta, ids[i])), gamma)
    return out


def _zh_on_coset(n: int) -> np.ndarray:
    N = BLOWUP * n
    base = pow(SHIFT, n, P)
    w8 = root_of_unity(BLOWUP)
    period = np.array([(base * pow(w8, i, P) - 1) % P for i in range(BLOWUP)], dtype=np.uint64)
    return np.tile(period, N // BLOWUP)


# ---------------------------------------------------------------------------
# verifier


def _lagrange_sum(values: list[int], zeta: int, n: int) -> int:
    """sum_i values[i] * L_i(zeta) over the first len(values) rows of H."""
    omega = root_of_unity(n)
    zh = (pow(zeta, n, P) - 1) % P
    acc = 0
    w = 1
    denoms = []
    for _ in values:
        denoms.append((zeta - w) % P)
        w = w * omega % P
    inv_d = _batch_inv_py(denoms)
    w = 1
    for v, d in zip(values, inv_d):
        acc = (acc + v * w % P * d) % P
        w = w * omega % P
    return acc * zh % P * inv(n) % P


def _batch_inv_py(xs: list[int]) -> list[int]:
    if not xs:
        return []
    prefix = [1]
    for x in xs:
        prefix.append(prefix[-1] * x % P)
    acc = inv(prefix[-1])
    out = [0] * len(xs)
    for i in range(len(xs) - 1, -1, -1):
        out[i] = acc * prefix[i] % P
        acc = acc * xs[i] % P
    return out


_W8 = root_of_unity(FOLD)
_W8_INV_POW = [[pow(_W8, (-e * t) % FOLD, P) for e in range(FOLD)] for t in range(FOLD)]
_INV8 = inv(FOLD)
_BR3 = [_br_index(s, 3) for s in range(FOLD)]


def _fold_coset(values: list[int], x0: int, beta: int) -> int:
    """Fold 8 values stored at bit-reversed positions of the coset x0*<w8>."""
    c = [values[_BR3[e]] for e in range(FOLD)]
    ratio = beta * inv(x0) % P
    acc = 0
    rp = 1
    for t_ in range(FOLD):
        row = _W8_INV_POW[t_]
        h = sum(row[e] * c[e] for e in range(FOLD)) % P * _INV8 % P
        acc = (acc + rp * h) % P
        rp = rp * ratio % P
    return acc


def verify(vk: VerifyingKey, inputs: list[int], proof: Proof) -> bool:
    """Check a proof against the verifying key and the phase-1 public inputs."""
    n = vk.n
    N = BLOWUP * n
    if len(inputs) != vk.n_pub - len(vk.challenge_names):
        return False
    if any(not 0 <= int(v) < P for v in inputs):
        return False
    rounds = _fri_rounds(n)
    if len(proof.fri_roots) != rounds - 1 or len(proof.final_poly) != n // FOLD ** rounds:
        return False

    t = _transcript(vk, inputs)
    t.absorb(b"w1", proof.roots[0])
    challenges = {name: t.challenge(b"gadget:" + name.encode()) for name in vk.challenge_names}
    t.absorb(b"w2", proof.roots[1])
    beta = t.challenge(b"beta")
    gamma = t.challenge(b"gamma")
    t.absorb(b"z", proof.roots[2])
    lam = t.challenge(b"lambda")
    t.absorb(b"t", proof.roots[3])
    zeta = _sample_zeta(t, n)
    t.absorb_ints(b"evals", list(proof.evals) + [proof.z_next])
    mu = t.challenge(b"deep")

    # constraint identity at zeta
    e = proof.evals
    qL, qR, qO, qM, qC, phA, phB, phC, sA, sB, sC = e[:N_PRE]
    a1, b1, c1, a2, b2, c2 = e[N_PRE : N_PRE + 6]
    zz = e[N_PRE + 6]
    t0, t1, t2 = e[N_PRE + 7 :]
    a, b, c = (a1 + a2) % P, (b1 + b2) % P, (c1 + c2) % P
    pub_vals = _public_values(vk, [int(v) for v in inputs], challenges)
    pi = _lagrange_sum([(-v) % P for v in pub_vals], zeta, n)
    gate = (qM * a * b + qL * a + qR * b + qO * c + qC + pi) % P
    pa = (1 - phA) * a2 % P
    pb = (1 - phB) * b2 % P
    pc = (1 - phC) * c2 % P
    bz = beta * zeta % P
    num = (a + bz + gamma) * (b + K1 * bz + gamma) % P * (c + K2 * bz + gamma) % P
    den = (a + beta * sA + gamma) * (b + beta * sB + gamma) % P * (c + beta * sC + gamma) % P
    perm = (proof.z_next * den - zz * num) % P
    zeta_n = pow(zeta, n, P)
    zh = (zeta_n - 1) % P
    l0 = zh * inv(n * (zeta - 1) % P) % P
    init = l0 * (zz - 1) % P
    lhs = gate
    lp = 1
    for term in (pa, pb, pc, perm, init):
        lp = lp * lam % P
        lhs = (lhs + lp * term) % P
    t_zeta = (t0 + zeta_n * t1 + zeta_n * zeta_n % P * t2) % P
    if lhs != zh * t_zeta % P:
        return False

    # FRI commit-phase challenges
    fold_betas = []
    for r in range(rounds):
        fold_betas.append(t.challenge(b"fold"))
        if r < rounds - 1:
            t.absorb(b"fri", proof.fri_roots[r])
    t.absorb_ints(b"final", proof.final_poly)

    mus = [1]
    for _ in range(N_OPEN):
        mus.append(mus[-1] * mu % P)
    omega = root_of_unity(n)
    zeta_w = zeta * omega % P
    omega_N = root_of_unity(N)
    roots = [vk.pre_root] + list(proof.roots)
    log_leaves = (N // LEAF_WIDTH).bit_length() - 1
    evals = list(proof.evals)

    for q in proof.queries:
        q0 = t.challenge_index(b"query", n)
        for tree_idx, (values, salt, path) in enumerate(q.trace):
            if len(path) != log_leaves:
                return False
            if tree_idx > 0 and len(salt) != SALT:
                return False
            if not verify_leaf(roots[tree_idx], q0, values, salt, path):
                return False
        cols = np.concatenate([tr[0] for tr in q.trace], axis=1)  # (8, N_OPEN)
        x0 = SHIFT * pow(omega_N, _br_index(q0, log_leaves), P) % P
        deep_vals = []
        for s in range(LEAF_WIDTH):
            x = x0 * pow(_W8, _BR3[s], P) % P
            row = [int(v) for v in cols[s]]
            acc = sum(mus[j] * (row[j] - evals[j]) for j in range(N_OPEN)) % P
            acc = acc * inv((x - zeta) % P) % P
            extra = mus[N_OPEN] * (row[N_PRE + 6] - proof.z_next) % P * inv((x - zeta_w) % P) % P
            deep_vals.append((acc + extra) % P)
        value = _fold_coset(deep_vals, x0, fold_betas[0])
        pos = q0
        shift = SHIFT
        size = N
        for r in range(1, rounds):
            shift = pow(shift, FOLD, P)
            size //= FOLD
            values, path = q.layers[r - 1]
            leaf = pos // LEAF_WIDTH
            bits = (size // LEAF_WIDTH).bit_length() - 1
            if len(path) != bits or not verify_leaf(proof.fri_roots[r - 1], leaf, values, b"", path):
                return False
            layer_vals = [int(v) for v in values[:, 0]]
            if layer_vals[pos % LEAF_WIDTH] != value:
                return False
            xl = shift * pow(root_of_unity(size), _br_index(leaf, bits), P) % P
            value = _fold_coset(layer_vals, xl, fold_betas[r])
            pos = leaf
        shift = pow(shift, FOLD, P)
        size //= FOLD
        y = shift * pow(root_of_unity(size), _br_index(pos, size.bit_length() - 1), P) % P
        if eval_coeffs(np.array(proof.final_poly, dtype=np.uint64), y) != value:
            return False
    return True
