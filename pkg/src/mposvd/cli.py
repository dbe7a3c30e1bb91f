"""Command-line interface: convert, tnrsvd and bench subcommands."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import (
    run_convert_bench,
    run_hilbert_bench,
    run_spectrum_bench,
    write_csv,
    CSV_HEADER,
)
from .mpo import CONTRACT_GUARD, contract_to_matrix, load_mpo, mpo_round, save_mpo
from .partition import plan_partition
from .rsvd import tnrsvd
from .sparse import bandwidth, cuthill_mckee, matrix_to_mpo, permute, \
    read_matrix_market


def _parse_plan_strategy(text: str):
    if text == "descending":
        return "descending"
    if text.startswith("explicit="):
        body = text[len("explicit="):]
        try:
            rows_s, cols_s = body.split("x")
            rf = tuple(int(s) for s in rows_s.split(","))
            cf = tuple(int(s) for s in cols_s.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"explicit plan must look like explicit=7,5,1x3,2,2: {text!r}"
            ) from None
        return (rf, cf)
    if "x" in text:
        return text
    raise argparse.ArgumentTypeError(f"unrecognized plan {text!r}")


def _parse_range(text: str) -> list[int]:
    """'10..14' -> [10..14]; '10,12' -> [10, 12]; '12' -> [12]."""
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",")]


def _cmd_convert(args) -> int:
    a = read_matrix_market(args.input)
    print(f"read {a.rows}x{a.cols} matrix, nnz={a.nnz}, "
          f"bandwidth={bandwidth(a)}")
    perms = None
    if args.permute == "cm":
        rp, cp = cuthill_mckee(a)
        a = permute(a, rp, cp)
        perms = {"row_perm": rp.tolist(), "col_perm": cp.tolist()}
        print(f"cuthill-mckee: bandwidth now {bandwidth(a)}")
    plan = plan_partition(a.rows, a.cols, args.plan)
    m = matrix_to_mpo(a, plan, rank_cap=args.rank_cap,
                      round_tol=args.round_tol)
    if args.round_tol is not None:
        m = mpo_round(m.densify(limit=None), args.round_tol)
    save_mpo(m, args.output)
    if perms is not None:
        perm_path = Path(args.output).with_suffix(".perms.json")
        perm_path.write_text(json.dumps(perms))
        print(f"wrote permutations to {perm_path}")
    print(f"plan rows={plan.row_factors} cols={plan.col_factors}")
    print(f"wrote {args.output}: {m!r}")
    if args.verify:
        if m.num_rows * m.num_cols <= CONTRACT_GUARD:
            back = contract_to_matrix(m)[:a.rows, :a.cols]
            dense = a.to_dense()
            denom = np.linalg.norm(dense)
            err = np.linalg.norm(back - dense) / denom if denom else 0.0
            print(f"round-trip relative error: {err:.3e}")
        else:
            print("round-trip verification skipped: matrix too large")
    return 0


def _cmd_tnrsvd(args) -> int:
    m = load_mpo(args.input)
    print(f"loaded {m!r}")
    lr = tnrsvd(m, args.rank, q=args.power, round_tol=args.round_tol,
                oversample=args.oversample, seed=args.seed)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    save_mpo(lr.u, outdir / "u.mpo")
    save_mpo(lr.v, outdir / "v.mpo")
    with open(outdir / "s.csv", "w", encoding="utf-8") as f:
        f.write("index,value\n")
        for i, val in enumerate(lr.s, start=1):
            f.write(f"{i},{float(val)!r}\n")
    print(f"wrote u.mpo, s.csv, v.mpo to {outdir} "
          f"(K={lr.k_oversampled}, kept {lr.k_target})")
    print("leading singular values:", " ".join(f"{v:.6g}" for v in lr.s[:8]))
    return 0


def _cmd_bench(args) -> int:
    if args.experiment == "hilbert":
        records = run_hilbert_bench(_parse_range(args.n), k_target=args.rank,
                                    q=args.power, round_tol=args.round_tol,
                                    seed=args.seed)
    elif args.experiment == "spectrum":
        records = run_spectrum_bench(_parse_range(args.n), k_target=args.rank,
                                     q=args.power, seed=args.seed)
    else:
        records = run_convert_bench(size=args.size, density=args.density,
                                    seed=args.seed, with_ttsvd=args.ttsvd)
    print(CSV_HEADER)
    for r in records:
        print(r.csv_row())
    if args.csv:
        write_csv(records, args.csv)
        print(f"wrote {args.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mposvd",
        description="Sparse-matrix to MPO conversion and randomized "
                    "low-rank SVD in MPO form",
    )
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convert", help="Matrix Market file to serialized MPO")
    c.add_argument("--input", required=True)
    c.add_argument("--output", required=True)
    c.add_argument("--plan", type=_parse_plan_strategy, default="descending",
                   help="descending | I1xJ1 | explicit=I1,..,IdxJ1,..,Jd")
    c.add_argument("--round-tol", type=float, default=None)
    c.add_argument("--rank-cap", type=int, default=None)
    c.add_argument("--permute", choices=["cm", "none"], default="none")
    c.add_argument("--verify", action="store_true")
    c.set_defaults(fn=_cmd_convert)

    t = sub.add_parser("tnrsvd", help="randomized SVD of a serialized MPO")
    t.add_argument("--input", required=True)
    t.add_argument("--output", required=True, help="output directory")
    t.add_argument("--rank", type=int, required=True)
    t.add_argument("--power", type=int, default=2)
    t.add_argument("--round-tol", type=float, default=1e-9)
    t.add_argument("--oversample", type=float, default=2.0)
    t.add_argument("--seed", type=int, default=None)
    t.set_defaults(fn=_cmd_tnrsvd)

    b = sub.add_parser("bench", help="benchmark harness (CSV output)")
    bsub = b.add_subparsers(dest="experiment", required=True)
    bh = bsub.add_parser("hilbert")
    bh.add_argument("--n", required=True, help="e.g. 10..14 or 10,12")
    bh.add_argument("--rank", type=int, default=16)
    bh.add_argument("--power", type=int, default=2)
    bh.add_argument("--round-tol", type=float, default=1e-9)
    bh.add_argument("--seed", type=int, default=0)
    bh.add_argument("--csv", default=None)
    bh.set_defaults(fn=_cmd_bench)
    bs = bsub.add_parser("spectrum")
    bs.add_argument("--n", required=True)
    bs.add_argument("--rank", type=int, default=50)
    bs.add_argument("--power", type=int, default=1)
    bs.add_argument("--seed", type=int, default=0)
    bs.add_argument("--csv", default=None)
    bs.set_defaults(fn=_cmd_bench)
    bc = bsub.add_parser("convert")
    bc.add_argument("--size", type=int, default=4096)
    bc.add_argument("--density", type=float, default=0.01)
    bc.add_argument("--ttsvd", action="store_true")
    bc.add_argument("--seed", type=int, default=0)
    bc.add_argument("--csv", default=None)
    bc.set_defaults(fn=_cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"mposvd: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
