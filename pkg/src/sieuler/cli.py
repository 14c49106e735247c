"""Command-line entry point: ``sieuler {simulate,converge,prob-order,selfcheck}``."""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import io
from .config import ConfigError, RunConfig, dump_config, parse_config
from .convergence import StudyFailure, make_initial_field, pathwise_error_study, probability_order_study
from .noise import build_spectrum, sample_brownian_table, zero_table
from .selfcheck import run_selfcheck
from .stepper import SolverFailure, StepperConfig, simulate_path

log = logging.getLogger("sieuler")

INCOMPLETE = "INCOMPLETE"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sieuler", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("simulate", "converge", "prob-order", "selfcheck"):
        p = sub.add_parser(mode)
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--seed", help="master seed (unsigned 64-bit)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", help="worker processes for independent paths")
        p.add_argument("--n", help="step count (simulate)")
        p.add_argument("--levels", help="step counts, e.g. 16,32,64 or 16..512")
        p.add_argument("--N", dest="N", help="truncation radius")
        p.add_argument("--T", dest="T", help="final time")
        p.add_argument("--c0", help="noise amplitude")
        p.add_argument("--r", help="noise decay exponent")
        p.add_argument("--paths", help="Monte-Carlo paths")
        p.add_argument("--xi0", help="preset-3mode or random-smooth(s, seed)")
        p.add_argument("--ref-extra", dest="ref_extra", help="extra dyadic refinements of the reference")
        p.add_argument("--betas", help="comma-separated exponents in (0, 1)")
        p.add_argument("--solver", help="fixed-point or dense")
        p.add_argument("--diagnostics", action="store_const", const=True, help="record per-step solver diagnostics")
    return parser


def config_from_args(argv=None) -> RunConfig:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    text, source = None, "<config>"
    if args.config is not None:
        text, source = args.config.read_text(), str(args.config)
        # the subcommand names the mode; a mode line in the file must agree
        if "mode" in {k for k in _keys(text)}:
            file_mode = parse_config(text, source=source).mode
            if file_mode != args.mode:
                raise ConfigError(f"{source}: mode '{file_mode}' conflicts with subcommand '{args.mode}'")
    return parse_config(text, overrides, source=source)


def _keys(text):
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        if "=" in line:
            yield line.split("=", 1)[0].strip()


def _simulate(cfg: RunConfig, out: Path) -> int:
    study = cfg.study()
    xi0 = make_initial_field(study.xi0, cfg.N, study.xi0_decay, study.xi0_seed)
    if cfg.c0 == 0:
        spectrum = build_spectrum(cfg.N, 0.0, cfg.r, allow_zero=True)
        table = zero_table(cfg.N, cfg.n, cfg.T)
    else:
        spectrum = build_spectrum(cfg.N, cfg.c0, cfg.r)
        table = sample_brownian_table(spectrum, cfg.n, cfg.T, cfg.seed, 0)
    stepper = StepperConfig(cfg.T / cfg.n, solver=cfg.solver, fp_tol=cfg.fp_tol, fp_max_iter=cfg.fp_max_iter, dense_dim_cap=cfg.dense_dim_cap)
    traj = simulate_path(xi0, spectrum, table, 0, stepper, diagnostics=cfg.diagnostics)
    io.write_trajectory(out / "trajectory.sie", traj)
    io.write_diagnostics_csv(out / "diagnostics.csv", traj)
    log.info("simulated %d steps, |xi_n|_2 = %.6g", cfg.n, (traj.states[-1].coeffs ** 2).sum() ** 0.5)
    return 0


def _converge(cfg: RunConfig, out: Path) -> int:
    report = pathwise_error_study(cfg.study())
    io.write_error_csv(out / "errors.csv", report)
    io.write_summary_csv(out / "summary.csv", report)
    for pid, fit in sorted(report.fits.items()):
        if fit is not None:
            log.info("path %d: slope %.4f  R^2 %.4f", pid, fit.slope, fit.r2)
    for note in report.warnings:
        log.warning(note)
    return 0


def _prob_order(cfg: RunConfig, out: Path) -> int:
    table = probability_order_study(cfg.study(), cfg.betas)
    io.write_error_csv(out / "errors.csv", table.report)
    io.write_summary_csv(out / "summary.csv", table.report)
    io.write_exceedance_csv(out / "exceedance.csv", table)
    for b in cfg.betas:
        if not table.finest_le_coarsest[b]:
            log.warning("beta=%g: exceedance at finest level exceeds coarsest", b)
    return 0


def run(cfg: RunConfig) -> int:
    """Execute one configured run; returns the process exit status."""
    if cfg.mode == "selfcheck":
        return 0 if run_selfcheck() else 1
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / INCOMPLETE
    marker.write_text("run in progress or failed\n")
    (out / "config.txt").write_text(dump_config(cfg))
    handler = {"simulate": _simulate, "converge": _converge, "prob-order": _prob_order}[cfg.mode]
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            status = handler(cfg, out)
        for text in dict.fromkeys(f"{w.category.__name__}: {w.message}" for w in caught):
            log.warning(text)
    except (SolverFailure, StudyFailure) as exc:
        marker.write_text(f"{cfg.mode} failed: {exc}\n")
        log.error("%s failed: %s", cfg.mode, exc)
        return 2
    marker.unlink()
    return status


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
