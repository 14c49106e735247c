"""Self-convergence experiments on common Brownian paths.

Every path gets one Brownian table at the reference resolution
n_ref = max(levels) * 2**ref_extra.  The reference trajectory and every
coarse trajectory are driven by dyadic sums of that same table, and errors
are sampled at the coarse grid points, which embed in the reference grid.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import spectral as sp
from .noise import build_spectrum, sample_brownian_table
from .stepper import SolverFailure, StepperConfig, Trajectory, recover_observables, simulate_path

DEFAULT_LEVELS = (16, 32, 64, 128, 256, 512)


class StudyFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class StudyConfig:
    N: int = 16
    T: float = 0.5
    xi0: str = "preset-3mode"
    xi0_decay: float = 4.0
    xi0_seed: int = 0
    c0: float = 0.1
    r: float = 6.0
    levels: tuple = DEFAULT_LEVELS
    ref_extra: int = 2
    paths: int = 3
    master_seed: int = 0
    workers: int = 1
    solver: str = "fixed-point"
    fp_tol: float = 1e-12
    fp_max_iter: int = 200
    dense_dim_cap: int = 4096

    def __post_init__(self):
        levels = tuple(int(n) for n in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ValueError("at least one level is required")
        if levels[0] < 1:
            raise ValueError("step counts must be positive")
        for a, b in zip(levels, levels[1:]):
            if b != 2 * a:
                raise ValueError(f"levels must increase dyadically, got {a} then {b}")
        if self.ref_extra < 0:
            raise ValueError("ref_extra must be >= 0")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def n_ref(self) -> int:
        return self.levels[-1] * 2**self.ref_extra

    def initial_field(self) -> sp.SpectralField:
        return make_initial_field(self.xi0, self.N, self.xi0_decay, self.xi0_seed)

    def stepper(self) -> StepperConfig:
        return StepperConfig(
            tau=self.T / self.n_ref,
            solver=self.solver,
            fp_tol=self.fp_tol,
            fp_max_iter=self.fp_max_iter,
            dense_dim_cap=self.dense_dim_cap,
            guard=False,
        )


def make_initial_field(kind: str, N: int, decay: float = 4.0, seed: int = 0) -> sp.SpectralField:
    if kind == "preset-3mode":
        return sp.preset_three_mode(N)
    if kind == "random-smooth":
        return sp.random_smooth_field(N, np.random.default_rng(seed), decay)
    raise ValueError(f"unknown initial condition {kind!r}")


# ---------------------------------------------------------------------------
# order fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderFit:
    slope: float
    intercept: float
    r2: float
    degenerate: bool = False
    n_points: int = 0


def fit_order(points: Sequence[tuple[float, float]]) -> OrderFit:
    """Least-squares line through (log tau, log error)."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError(f"order fit needs at least 3 points, got {len(pts)}")
    taus = np.array([p[0] for p in pts], dtype=float)
    errs = np.array([p[1] for p in pts], dtype=float)
    if np.any(taus <= 0):
        raise ValueError("step sizes must be positive")
    if np.any(~(errs > 0)):
        return OrderFit(math.nan, math.nan, math.nan, degenerate=True, n_points=len(pts))
    x, y = np.log(taus), np.log(errs)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return OrderFit(float(slope), float(intercept), r2, n_points=len(pts))


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------


def _check_aligned(coarse: Trajectory, reference: Trajectory) -> int:
    if coarse.n == 0 or reference.n % coarse.n:
        raise ValueError(f"coarse grid ({coarse.n} steps) does not embed in reference grid ({reference.n} steps)")
    if not math.isclose(coarse.times[-1], reference.times[-1], rel_tol=1e-12):
        raise ValueError("coarse and reference trajectories end at different times")
    if coarse.states[0].N != reference.states[0].N:
        raise ValueError("coarse and reference trajectories use different truncations")
    return reference.n // coarse.n


def state_errors(coarse: Trajectory, reference: Trajectory) -> np.ndarray:
    """|xi_i - xi_ref(t_i)|_2 at every coarse grid point."""
    ratio = _check_aligned(coarse, reference)
    return np.array([sp.l2_norm(x - reference.states[i * ratio]) for i, x in enumerate(coarse.states)])


def observable_errors(coarse: Trajectory, reference: Trajectory, _cache: dict | None = None) -> np.ndarray:
    """Per-step (||u - u_ref||_1, ||pi - pi_ref||_1), shape (n + 1, 2)."""
    ratio = _check_aligned(coarse, reference)
    cache = {} if _cache is None else _cache
    out = np.empty((coarse.n + 1, 2))
    for i, x in enumerate(coarse.states):
        j = i * ratio
        if j not in cache:
            cache[j] = recover_observables(reference.states[j])
        u_ref, p_ref = cache[j]
        u, p = recover_observables(x)
        out[i] = sp.sobolev_norm(u - u_ref, 1), sp.sobolev_norm(p - p_ref, 1)
    return out


@dataclass
class PathResult:
    path_id: int
    taus: list = field(default_factory=list)
    sup_l2: list = field(default_factory=list)
    sup_u_h1: list = field(default_factory=list)
    sup_pi_h1: list = field(default_factory=list)
    sup_obs_h1: list = field(default_factory=list)  # sup of the sum, not the sum of sups
    error: str | None = None


def run_path(cfg: StudyConfig, path_id: int) -> PathResult:
    res = PathResult(path_id)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spectrum = build_spectrum(cfg.N, cfg.c0, cfg.r, allow_zero=True)
    table = sample_brownian_table(spectrum, cfg.n_ref, cfg.T, cfg.master_seed, path_id)
    xi0 = cfg.initial_field()
    stepper = cfg.stepper()
    try:
        ref = simulate_path(xi0, spectrum, table, 0, stepper)
        cache: dict = {}
        for n in cfg.levels:
            level = table.level_for_steps(n)
            traj = ref if level == 0 else simulate_path(xi0, spectrum, table, level, stepper)
            e = state_errors(traj, ref)[1:]
            obs = observable_errors(traj, ref, cache)[1:]
            res.taus.append(cfg.T / n)
            res.sup_l2.append(float(e.max()))
            res.sup_u_h1.append(float(obs[:, 0].max()))
            res.sup_pi_h1.append(float(obs[:, 1].max()))
            res.sup_obs_h1.append(float(obs.sum(axis=1).max()))
    except SolverFailure as exc:
        res.error = f"solver failure at step {exc.step}: {exc}"
    return res


@dataclass
class ErrorReport:
    cfg: StudyConfig
    paths: list
    fits: dict
    pooled: OrderFit | None
    warnings: list = field(default_factory=list)

    @property
    def ok_paths(self) -> list:
        return [p for p in self.paths if p.error is None]

    def taus(self) -> list:
        return [self.cfg.T / n for n in self.cfg.levels]

    def level_errors(self, which: str = "sup_l2") -> np.ndarray:
        """Array (paths, levels) of one error kind over the successful paths."""
        return np.array([getattr(p, which) for p in self.ok_paths])

    def aggregates(self, which: str = "sup_l2") -> list[dict]:
        errs = self.level_errors(which)
        out = []
        for j, n in enumerate(self.cfg.levels):
            col = errs[:, j] if errs.size else np.array([math.nan])
            out.append(
                {
                    "n": n,
                    "tau": self.cfg.T / n,
                    "mean": float(np.mean(col)),
                    "median": float(np.median(col)),
                    "max": float(np.max(col)),
                }
            )
        return out


def _fit_or_none(taus, errs) -> OrderFit | None:
    if len(taus) < 3:
        return None
    return fit_order(list(zip(taus, errs)))


def _run_paths(cfg: StudyConfig) -> list[PathResult]:
    ids = list(range(cfg.paths))
    if cfg.workers <= 1:
        return [run_path(cfg, i) for i in ids]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        # map preserves submission order, so reduction is by ascending path id
        return list(pool.map(run_path, [cfg] * len(ids), ids))


def pathwise_error_study(cfg: StudyConfig) -> ErrorReport:
    """Sup-in-time errors of every level against the fine reference, per path."""
    results = _run_paths(cfg)
    failed = [p for p in results if p.error is not None]
    if len(failed) > 0.2 * len(results):
        raise StudyFailure(
            f"{len(failed)} of {len(results)} paths aborted: " + "; ".join(f"path {p.path_id}: {p.error}" for p in failed)
        )
    notes = [f"path {p.path_id} aborted: {p.error}" for p in failed]
    fits = {p.path_id: _fit_or_none(p.taus, p.sup_l2) for p in results if p.error is None}
    ok = [p for p in results if p.error is None]
    pooled = _fit_or_none([t for p in ok for t in p.taus], [e for p in ok for e in p.sup_l2])
    report = ErrorReport(cfg, results, fits, pooled, notes)
    med = [row["median"] for row in report.aggregates()]
    for j in range(1, len(med)):
        if med[j] > med[j - 1]:
            notes.append(f"median sup-error increased from n={cfg.levels[j - 1]} to n={cfg.levels[j]}")
    return report


# ---------------------------------------------------------------------------
# convergence in probability
# ---------------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass
class ExceedanceTable:
    rows: list  # dicts: n, tau, beta, exceed, paths, fraction, ci_low, ci_high
    monotone: dict  # beta -> fraction non-increasing under refinement
    finest_le_coarsest: dict  # beta -> fraction(finest) <= fraction(coarsest)
    report: ErrorReport | None = None


def exceedance_table(taus: Sequence[float], levels: Sequence[int], errors: np.ndarray, betas: Sequence[float]) -> ExceedanceTable:
    """Fraction of paths with sup-error >= tau**beta, per (level, beta).

    ``errors`` has shape (paths, levels).
    """
    betas = list(betas)
    if not betas:
        raise ValueError("at least one beta is required")
    for b in betas:
        if not 0 < b < 1:
            raise ValueError(f"beta must lie in (0, 1), got {b}")
    errors = np.atleast_2d(np.asarray(errors, dtype=float))
    n_paths = errors.shape[0]
    rows, monotone, ends = [], {}, {}
    for b in betas:
        fracs = []
        for j, (n, tau) in enumerate(zip(levels, taus)):
            hits = int(np.sum(errors[:, j] >= tau**b))
            lo, hi = wilson_interval(hits, n_paths)
            frac = hits / n_paths
            fracs.append(frac)
            rows.append(
                {"n": n, "tau": tau, "beta": b, "exceed": hits, "paths": n_paths, "fraction": frac, "ci_low": lo, "ci_high": hi}
            )
        monotone[b] = all(fracs[j + 1] <= fracs[j] for j in range(len(fracs) - 1))
        ends[b] = fracs[-1] <= fracs[0]
    return ExceedanceTable(rows, monotone, ends)


def probability_order_study(cfg: StudyConfig, betas: Sequence[float], report: ErrorReport | None = None) -> ExceedanceTable:
    """Empirical P(sup_i |e(t_i)|_2 >= tau**beta) for each level and beta."""
    if not list(betas):
        raise ValueError("at least one beta is required")
    if report is None:
        report = pathwise_error_study(cfg)
    table = exceedance_table(report.taus(), cfg.levels, report.level_errors("sup_l2"), betas)
    table.report = report
    return table
