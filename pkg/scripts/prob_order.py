"""Exceedance fractions P(sup|e|_2 >= tau^beta) per level, with Wilson intervals.

    python3 scripts/prob_order.py --paths 50 --out out/prob
"""

import argparse
from pathlib import Path

from sieuler import io
from sieuler.convergence import StudyConfig, probability_order_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=50)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.6, 0.75, 0.9])
    ap.add_argument("--c0", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    cfg = StudyConfig(paths=args.paths, c0=args.c0, master_seed=args.seed, workers=args.workers)
    table = probability_order_study(cfg, args.betas)
    for b in args.betas:
        print(f"beta = {b}")
        for r in (r for r in table.rows if r["beta"] == b):
            print(f"  n={r['n']:4d}  {r['exceed']:3d}/{r['paths']}  {r['fraction']:.3f}  [{r['ci_low']:.3f}, {r['ci_high']:.3f}]")
        print(f"  non-increasing: {table.monotone[b]}   finest <= coarsest: {table.finest_le_coarsest[b]}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        io.write_exceedance_csv(args.out / "exceedance.csv", table)
        io.write_error_csv(args.out / "errors.csv", table.report)


if __name__ == "__main__":
    main()
