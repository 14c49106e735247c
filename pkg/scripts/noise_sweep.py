"""Fitted pathwise order as a function of the noise amplitude c0.

With smooth additive noise and weak forcing the scheme behaves like its
deterministic part (order about 1); the rougher behaviour only shows up once
the noise dominates the transport.

    python3 scripts/noise_sweep.py --amplitudes 0 0.1 1 5
"""

import argparse
import time

from sieuler.convergence import StudyConfig, pathwise_error_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[0.0, 0.1, 1.0, 5.0])
    ap.add_argument("--N", type=int, default=16)
    ap.add_argument("--paths", type=int, default=1)
    ap.add_argument("--levels", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    ap.add_argument("--ref-extra", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("    c0   path   slope     R^2    time")
    for c0 in args.amplitudes:
        cfg = StudyConfig(
            N=args.N, c0=c0, levels=tuple(args.levels), ref_extra=args.ref_extra,
            paths=args.paths, master_seed=args.seed,
        )
        t0 = time.perf_counter()
        rep = pathwise_error_study(cfg)
        dt = time.perf_counter() - t0
        for pid, fit in sorted(rep.fits.items()):
            if fit.degenerate:
                print(f"{c0:6g}  {pid:5d}   (zero error)")
            else:
                print(f"{c0:6g}  {pid:5d}  {fit.slope:6.3f}  {fit.r2:6.3f}  {dt:5.1f}s")


if __name__ == "__main__":
    main()
