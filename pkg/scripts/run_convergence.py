"""Pathwise self-convergence study: per-path errors against the fine reference and fitted slopes.

    python3 scripts/run_convergence.py --paths 3 --out out/converge
"""

import argparse
import time
from pathlib import Path

from sieuler import io
from sieuler.convergence import StudyConfig, pathwise_error_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=16)
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--c0", type=float, default=0.1)
    ap.add_argument("--r", type=float, default=6.0)
    ap.add_argument("--paths", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--coarsest", type=int, default=16)
    ap.add_argument("--finest", type=int, default=512)
    ap.add_argument("--ref-extra", type=int, default=2)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    levels = [args.coarsest]
    while levels[-1] < args.finest:
        levels.append(2 * levels[-1])
    cfg = StudyConfig(
        N=args.N, T=args.T, c0=args.c0, r=args.r, levels=tuple(levels),
        ref_extra=args.ref_extra, paths=args.paths, master_seed=args.seed, workers=args.workers,
    )
    t0 = time.perf_counter()
    rep = pathwise_error_study(cfg)
    print(f"{cfg.paths} paths, n_ref = {cfg.n_ref}, {time.perf_counter() - t0:.1f}s\n")

    print("   n        tau     median sup|e|_2   max sup|e|_2")
    for row in rep.aggregates():
        print(f"{row['n']:4d}  {row['tau']:.3e}   {row['median']:.4e}     {row['max']:.4e}")
    print()
    for pid, fit in sorted(rep.fits.items()):
        print(f"path {pid}: slope {fit.slope:.3f}  R^2 {fit.r2:.4f}")
    if rep.pooled is not None:
        print(f"pooled: slope {rep.pooled.slope:.3f}  R^2 {rep.pooled.r2:.4f}")
    for note in rep.warnings:
        print("note:", note)

    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        io.write_error_csv(args.out / "errors.csv", rep)
        io.write_summary_csv(args.out / "summary.csv", rep)


if __name__ == "__main__":
    main()
