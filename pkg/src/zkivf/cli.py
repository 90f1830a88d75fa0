"""Command-line interface.

Exit codes: 0 success, 1 verification rejected, 2 usage error, 3 data error.

The configuration file holds ``key = value`` lines (``#`` starts a comment):
N0, D, n_list, n_probe, n, M, K, k, v_max, bits, signed, t_cmp, variant, seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import costmodel
from .exceptions import FingerprintMismatch, MalformedProof, ZkIvfError
from .fixedpoint import FieldSpec, FxScale, encode_matrix, encode_vector
from .formats import load_snapshot, read_fvecs, save_snapshot
from .shaping import IvfPqConfig, build_snapshot, gaussian_mixture

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3

_INT_KEYS = ("N0", "D", "n_list", "n_probe", "n", "M", "K", "k", "bits", "t_cmp", "seed")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# config


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _INT_KEYS:
            out[key] = int(value)
        elif key == "v_max":
            out[key] = float(value)
        elif key == "signed":
            out[key] = value.lower() in ("1", "true", "yes")
        elif key == "variant":
            out[key] = value
        else:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
    return out


class Settings:
    def __init__(self, values: dict):
        self.values = values
        try:
            self.config = IvfPqConfig(**{k: values[k] for k in
                                         ("N0", "D", "n_list", "n_probe", "n", "M", "K", "k")})
        except KeyError as exc:
            raise UsageError(f"config is missing {exc.args[0]!r}") from exc
        self.field = FieldSpec(t_cmp=values.get("t_cmp", 48))
        self.scale = FxScale(v_max=values.get("v_max", 1.0), bits=values.get("bits", 16),
                             signed=values.get("signed", True))
        self.variant = values.get("variant", "multiset")
        self.seed = values.get("seed", 0)


def load_settings(path) -> Settings:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    return Settings(parse_config(text))


# ---------------------------------------------------------------------------
# helpers


def _store(args):
    from .store import VersionStore

    if not args.store:
        raise UsageError("--store is required")
    return VersionStore(args.store)


def _query_vector(args, st: Settings):
    if args.q is not None:
        vec = np.array([float(x) for x in args.q.split(",")], dtype=np.float64)
    elif args.queries is not None:
        qs = read_fvecs(args.queries, st.config.D)
        if not 0 <= args.qi < len(qs):
            raise ZkIvfError(f"query index {args.qi} outside [0, {len(qs)})")
        vec = qs[args.qi].astype(np.float64)
    else:
        raise UsageError("give a query with --q or --queries/--qi")
    if vec.shape != (st.config.D,):
        raise ZkIvfError(f"query has {vec.size} coordinates, expected {st.config.D}")
    return encode_vector(vec, st.scale)


def _snapshot_for(args, st: Settings):
    if getattr(args, "snapshot", None):
        s = load_snapshot(args.snapshot)
    else:
        s = _store(args).snapshot(args.epoch)
    if s.config != st.config or s.scale != st.scale or s.field != st.field:
        raise ZkIvfError("snapshot parameters differ from the configuration")
    return s


# ---------------------------------------------------------------------------
# commands


def cmd_shape(args, out) -> int:
    st = load_settings(args.config)
    c = st.config
    seed = args.seed if args.seed is not None else st.seed
    if args.data:
        data = read_fvecs(args.data, c.D).astype(np.float64)
        if len(data) < c.N0:
            raise ZkIvfError(f"{args.data} holds {len(data)} vectors, config needs N0={c.N0}")
        data = data[: c.N0]
    else:
        data, _ = gaussian_mixture(c.N0, c.D, c.n_list, seed)
        data = data.astype(np.float64)
        peak = np.max(np.abs(data))
        if peak > 0:  # synthetic data is scaled into the configured range
            data = data * (0.999 * st.scale.v_max / peak)
        if not st.scale.signed:
            data = np.abs(data)
    items = np.arange(1, c.N0 + 1, dtype=np.uint64)
    s = build_snapshot(encode_matrix(data, st.scale), items, c, seed, st.scale, st.field)
    save_snapshot(s, args.out)
    rep = s.report
    print(f"snapshot written to {args.out}", file=out)
    print(f"valid slots: {s.valid_count}  moved: {rep.moved_count}  rounds: {rep.rounds}", file=out)
    return EXIT_OK


def cmd_commit(args, out) -> int:
    s = load_snapshot(args.snapshot)
    epoch, com = _store(args).append(s, args.epoch)
    print(f"epoch {epoch}", file=out)
    print(f"com {com.hex()}", file=out)
    return EXIT_OK


def cmd_query(args, out) -> int:
    from .semantics import run_query

    st = load_settings(args.config)
    s = _snapshot_for(args, st)
    res = run_query(_query_vector(args, st), s)
    for item, dist in zip(res.items, res.distances):
        print(f"{int(item)}\t{int(dist)}" if args.debug else f"{int(item)}", file=out)
    return EXIT_OK


def cmd_prove(args, out) -> int:
    from .proving import prove

    st = load_settings(args.config)
    variant = args.variant or st.variant
    s = _snapshot_for(args, st)
    com = _store(args).commitment(args.epoch) if args.store else None
    bundle = prove(s, _query_vector(args, st), variant, com=com, seed=args.seed)
    Path(args.out).write_bytes(bundle.to_bytes())
    print(" ".join(str(i) for i in bundle.public.items), file=out)
    print(f"proof written to {args.out} ({len(bundle.proof)} bytes)", file=out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    from .proving import ProofBundle, keygen, verify

    st = load_settings(args.config)
    variant = args.variant or st.variant
    com = _store(args).commitment(args.epoch)
    try:
        bundle = ProofBundle.from_bytes(Path(args.bundle).read_bytes())
    except MalformedProof as exc:
        print(f"reject: {exc}", file=out)
        return EXIT_REJECT
    if bundle.public.com != com:
        print("reject: bundle commitment differs from the store epoch", file=out)
        return EXIT_REJECT
    keys = keygen(st.config, st.scale, st.field, variant)
    try:
        ok = verify(bundle, keys)
    except (FingerprintMismatch, MalformedProof) as exc:
        print(f"reject: {exc}", file=out)
        return EXIT_REJECT
    print("accept" if ok else "reject", file=out)
    if ok:
        print(" ".join(str(i) for i in bundle.public.items), file=out)
    return EXIT_OK if ok else EXIT_REJECT


def cmd_tune(args, out) -> int:
    st = load_settings(args.config)
    variant = args.variant or st.variant
    budgets = costmodel.Budgets(N=args.N, B=args.B, r=args.r, k=st.config.k)
    Ks = [int(x) for x in args.K.split(",")]
    est = costmodel.model_estimator(st.config.D, budgets, variant, t_cmp=st.field.t_cmp)
    res = costmodel.pruned_search(args.N, args.B, args.r, args.n_list_max, Ks, est)
    print(res.table(), file=out)
    print(f"G_B* = {res.G_B_star}  n_list* = {res.n_list_star}  K* = {res.K_star}", file=out)
    if args.csv:
        n_lists = sorted({nl for nl, *_ in res.grid})
        Path(args.csv).write_text(costmodel.grid_csv(st.config.D, budgets, n_lists, Ks, variant,
                                                     t_cmp=st.field.t_cmp))
    return EXIT_OK


def cmd_gates(args, out) -> int:
    st = load_settings(args.config)
    variant = args.variant or st.variant
    e = costmodel.estimate(costmodel.Shape.of(st.config, st.field.t_cmp), variant,
                           costmodel.DEFAULT_CONSTANTS)
    print("term,estimated_gates", file=out)
    for name, value in e.terms.items():
        print(f"{name},{value:.0f}", file=out)
    print(f"G,{e.G:.0f}", file=out)
    print(f"G_B,{e.G_B}", file=out)
    if args.measure:
        from .proving import circuit_stats

        stats = circuit_stats(st.config, st.scale, st.field, variant)
        print("step,measured_gates", file=out)
        for name, value in stats.steps.items():
            print(f"{name},{value}", file=out)
        print(f"G,{stats.G}", file=out)
        print(f"G_B,{stats.G_B}", file=out)
        print("gadget,instances,gates", file=out)
        for name, (inst, g) in sorted(stats.gadgets.items()):
            print(f"{name},{inst},{g}", file=out)
    return EXIT_OK


def cmd_bench(args, out) -> int:
    from . import bench

    st = load_settings(args.config)
    seed = args.seed if args.seed is not None else st.seed
    if args.utility:
        res = bench.utility_comparison(seed=seed)
        for name in ("std", "zk"):
            cells = "  ".join(f"{k}={v:.4f}" for k, v in res[name].items())
            print(f"{name:<4} {cells}", file=out)
        print(f"recall delta {res['recall_delta']:.4f}  moved {res['moved']}", file=out)
        return EXIT_OK
    variants = [args.variant] if args.variant else list(costmodel.VARIANTS)
    print("system     " + " | ".join(bench.BENCH_COLUMNS), file=out)
    for v in variants:
        row = bench.bench_proofs(st.config, v, reps=args.reps, seed=seed, bits=st.scale.bits,
                                 field=st.field)
        print(row.format(), file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zkivf", description="Verifiable fixed-shape IVF-PQ retrieval")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, store=False, epoch=False):
        sp.add_argument("--config", required=True)
        if store:
            sp.add_argument("--store")
        if epoch:
            sp.add_argument("--epoch", type=int)

    def query_args(sp):
        sp.add_argument("--q", help="comma-separated query coordinates")
        sp.add_argument("--queries", help="fvecs file with query vectors")
        sp.add_argument("--qi", type=int, default=0, help="row of --queries to use")
        sp.add_argument("--snapshot", help="read the snapshot from a file instead of the store")

    sp = sub.add_parser("shape", help="build a snapshot from fvecs data or synthetic data")
    common(sp)
    sp.add_argument("--data")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_shape)

    sp = sub.add_parser("commit", help="append a snapshot to the store")
    sp.add_argument("--snapshot", required=True)
    sp.add_argument("--store", required=True)
    sp.add_argument("--epoch", type=int)
    sp.set_defaults(func=cmd_commit)

    sp = sub.add_parser("query", help="run a query")
    common(sp, store=True, epoch=True)
    query_args(sp)
    sp.add_argument("--debug", action="store_true", help="also print distances")
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("prove", help="prove a query answer")
    common(sp, store=True, epoch=True)
    query_args(sp)
    sp.add_argument("--variant", choices=costmodel.VARIANTS)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_prove)

    sp = sub.add_parser("verify", help="verify a proof bundle against a store epoch")
    common(sp, store=True, epoch=True)
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--variant", choices=costmodel.VARIANTS)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("tune", help="bin-pruned configuration search")
    common(sp)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--B", type=int, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--n-list-max", dest="n_list_max", type=int, required=True)
    sp.add_argument("--K", default="2,4,16,256")
    sp.add_argument("--variant", choices=costmodel.VARIANTS)
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_tune)

    sp = sub.add_parser("gates", help="gate-count breakdown")
    common(sp)
    sp.add_argument("--variant", choices=costmodel.VARIANTS)
    sp.add_argument("--measure", action="store_true", help="also build the real circuit")
    sp.set_defaults(func=cmd_gates)

    sp = sub.add_parser("bench", help="proof-cost or utility benchmark")
    common(sp)
    sp.add_argument("--reps", type=int, default=5)
    sp.add_argument("--variant", choices=costmodel.VARIANTS)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--utility", action="store_true")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ZkIvfError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
