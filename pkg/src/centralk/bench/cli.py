"""Command line entry point: ``bench --bench sssp --threads 1,2,4 ...``."""
from __future__ import annotations

import argparse
import sys

from .harness import BENCHES, BenchConfig, OracleMismatch, run_benchmark


def _int_list(text):
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bench", description="k-relaxed task storage benchmarks")
    ap.add_argument("--bench", choices=BENCHES, default="sssp")
    ap.add_argument("--size", type=int, default=None,
                    help="nodes (sssp, gp) or pushes per thread (stress)")
    ap.add_argument("--p", type=float, default=None, help="edge probability")
    ap.add_argument("--max-w", type=int, default=None, help="largest edge weight")
    ap.add_argument("--k", type=int, default=None, help="relaxation bound of every task")
    ap.add_argument("--threads", type=_int_list, default=[1, 2, 4, 8])
    ap.add_argument("--seeds", type=int, default=5, help="runs seeds 0..S-1")
    ap.add_argument("--block-size", type=int, default=128)
    ap.add_argument("--tests", type=int, default=None, help="slots probed per window")
    ap.add_argument("--ordering", choices=("relaxed", "strict", "both"), default="relaxed")
    ap.add_argument("--handshake", choices=("acquire", "fence"), default="acquire")
    ap.add_argument("--csv", default=None, help="row CSV; the summary goes next to it")
    ap.add_argument("--verify", action="store_true", help="compare against the sequential oracle")
    return ap


# desk-scale defaults per benchmark: size, p, max_w, k
DEFAULTS = {
    "sssp": (1000, 0.01, 10**8, 1024),
    "gp": (12, 0.9, 1000, 4),
    "stress": (10000, 0.0, 1, 4),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    size, p, max_w, k = DEFAULTS[args.bench]
    try:
        cfg = BenchConfig(
            bench=args.bench,
            size=size if args.size is None else args.size,
            p=p if args.p is None else args.p,
            max_w=max_w if args.max_w is None else args.max_w,
            k=k if args.k is None else args.k,
            threads=args.threads,
            seeds=range(args.seeds),
            block_size=args.block_size,
            tests=args.tests,
            ordering=args.ordering,
            handshake=args.handshake,
            csv=args.csv,
            verify=args.verify,
        )
    except ValueError as exc:
        print(f"bench: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_benchmark(cfg)
    except OracleMismatch as exc:
        print(f"bench: MISMATCH {exc}", file=sys.stderr)
        return 1
    print("bench,mode,threads,mean_runtime_s,sd_runtime_s")
    for row in report.summary:
        print(",".join(map(str, row)))
    if report.csv_path:
        print(f"rows: {report.csv_path}  summary: {report.summary_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
