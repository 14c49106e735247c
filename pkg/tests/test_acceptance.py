"""Acceptance criteria, each run at its stated tolerance.

Every test records one verdict line (collected by conftest and printed in the
terminal summary) and then asserts.  The exceedance-trend criterion is soft:
a failing trend produces a warning and a printed report, not a test failure.
"""

import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from sieuler import io
from sieuler import spectral as sp
from sieuler.convergence import StudyConfig, pathwise_error_study, probability_order_study
from sieuler.noise import build_spectrum, sample_brownian_table, wcurl_increment, zero_table
from sieuler.stepper import StepperConfig, implicit_transport_solve, simulate_path


def verdict(num, title, ok, detail, elapsed=None, budget=None):
    timing = "" if elapsed is None else f" [{elapsed:.1f}s / budget {budget:g}s]"
    ACCEPTANCE_LINES.append(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}: {title}: {detail}{timing}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def random_fields(N, count, seed):
    rng = np.random.default_rng(seed)
    return [sp.random_smooth_field(N, rng) for _ in range(count)]


@pytest.fixture(scope="module")
def default_study():
    t0 = time.perf_counter()
    rep = pathwise_error_study(StudyConfig())
    return rep, time.perf_counter() - t0


def test_c01_energy_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for tau in (1e-3, 1e-2):
        cfg = StepperConfig(tau=tau, guard=False)
        for xi in random_fields(16, 100, 1):
            out = implicit_transport_solve(xi, cfg)
            n2 = sp.l2_norm(xi) ** 2
            worst = max(worst, abs(sp.l2_norm(out) ** 2 + sp.l2_norm(xi - out) ** 2 - n2) / n2)
    dt = time.perf_counter() - t0
    ok = verdict(1, "energy identity", worst <= 1e-10 and dt < 10, f"max relative defect {worst:.2e} (tol 1e-10)", dt, 10)
    assert ok


def test_c02_l4_contraction():
    t0 = time.perf_counter()
    worst = -np.inf
    for tau in (1e-3, 1e-2):
        cfg = StepperConfig(tau=tau, guard=False)
        for xi in random_fields(16, 100, 2):
            out = implicit_transport_solve(xi, cfg)
            worst = max(worst, sp.lp_grid_norm(out, 4) / sp.lp_grid_norm(xi, 4) - 1.0)
    dt = time.perf_counter() - t0
    ok = verdict(2, "L4 contraction", worst <= 1e-8 and dt < 10, f"max |out|_4/|xi|_4 - 1 = {worst:.2e} (tol 1e-8)", dt, 10)
    assert ok


def test_c03_skew_symmetry():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        xi, z = sp.random_smooth_field(16, rng, 0.0), sp.random_smooth_field(16, rng, 0.0)
        val = abs(sp.transport_term(xi, z).inner(z))
        worst = max(worst, val / (sp.l2_norm(xi) * sp.sobolev_norm(z, 1) ** 2))
    dt = time.perf_counter() - t0
    ok = verdict(3, "skew-symmetry", worst <= 1e-10 and dt < 10, f"max normalised <B(xi)z, z> = {worst:.2e} (tol 1e-10)", dt, 10)
    assert ok


def test_c04_dense_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for N in (2, 4):
        for xi in random_fields(N, 50, 40 + N):
            a = implicit_transport_solve(xi, StepperConfig(tau=1e-2, guard=False))
            b = implicit_transport_solve(xi, StepperConfig(tau=1e-2, solver="dense", guard=False))
            worst = max(worst, sp.l2_norm(a - b))
    dt = time.perf_counter() - t0
    ok = verdict(4, "fixed-point vs dense", worst <= 1e-10 and dt < 30, f"max L2 gap {worst:.2e} (tol 1e-10)", dt, 30)
    assert ok


def test_c05_noise_statistics():
    t0 = time.perf_counter()
    N, n_fine, T = 4, 2**14, 1.0
    spec = build_spectrum(N, 0.1, 6.0)
    tab = sample_brownian_table(spec, n_fine, T, 5, 0)
    tau = T / n_fine
    se = tau * np.sqrt(2.0 / n_fine)
    var_z = max(abs(tab.beta[0][:, k1 + N, k2 + N].var() - tau) / se for k1, k2 in sp.mode_list(N))

    exact = all(
        np.array_equal(tab.beta[l + 1], tab.beta[l][0::2] + tab.beta[l][1::2])
        and all(
            np.array_equal(
                wcurl_increment(spec, tab, l + 1, i).coeffs,
                (wcurl_increment(spec, tab, l, 2 * i) + wcurl_increment(spec, tab, l, 2 * i + 1)).coeffs,
            )
            for i in range(min(tab.steps(l + 1), 64))
        )
        for l in range(tab.n_levels - 1)
    )

    tau_s = 0.01
    energy = np.array(
        [sp.l2_norm(wcurl_increment(spec, sample_brownian_table(spec, 1, tau_s, 6, p), 0, 0)) ** 2 for p in range(400)]
    )
    target = tau_s * spec.curl_variance_rate()
    e_z = abs(energy.mean() - target) / (energy.std(ddof=1) / np.sqrt(400))
    dt = time.perf_counter() - t0
    ok = var_z <= 4 and exact and e_z <= 3 and dt < 30
    verdict(
        5,
        "noise statistics",
        ok,
        f"worst variance z = {var_z:.2f} (tol 4), telescoping exact = {exact}, energy z = {e_z:.2f} (tol 3)",
        dt,
        30,
    )
    assert ok


def test_c06_steady_single_mode():
    t0 = time.perf_counter()
    e = sp.field_from_modes([((1, 0), 1.0)], 16)
    spec = build_spectrum(16, 0.0, 6.0, allow_zero=True)
    traj = simulate_path(e, spec, zero_table(16, 512, 0.5), 0)
    dev = max(np.max(np.abs(x.coeffs - e.coeffs)) for x in traj.states)
    dt = time.perf_counter() - t0
    ok = verdict(6, "steady single mode", dev <= 1e-12 and dt < 5, f"max deviation {dev:.2e} over 512 steps (tol 1e-12)", dt, 5)
    assert ok


@pytest.mark.slow
def test_c07_pathwise_order(default_study):
    rep, dt = default_study
    fits = [rep.fits.get(p.path_id) for p in rep.paths]
    good = [f is not None and not f.degenerate and 0.35 <= f.slope <= 0.65 and f.r2 >= 0.9 for f in fits]
    detail = ", ".join(
        f"path {p.path_id}: " + ("aborted" if f is None else f"slope {f.slope:.3f} R2 {f.r2:.3f}") for p, f in zip(rep.paths, fits)
    )
    ok = verdict(7, "pathwise order", all(good) and len(good) == 3 and dt < 600, detail + " (window [0.35, 0.65], R2 >= 0.9)", dt, 600)
    assert ok


@pytest.mark.slow
def test_c08_exceedance_trend():
    t0 = time.perf_counter()
    betas = (0.6, 0.75, 0.9)
    table = probability_order_study(StudyConfig(paths=50), betas)
    dt = time.perf_counter() - t0
    lines = []
    for b in betas:
        rows = [r for r in table.rows if r["beta"] == b]
        lo, hi = rows[0], rows[-1]
        lines.append(
            f"beta {b}: n={lo['n']} {lo['fraction']:.2f} [{lo['ci_low']:.2f}, {lo['ci_high']:.2f}] -> "
            f"n={hi['n']} {hi['fraction']:.2f} [{hi['ci_low']:.2f}, {hi['ci_high']:.2f}]"
        )
    ok = all(table.finest_le_coarsest[b] for b in betas) and dt < 45 * 60
    verdict(8, "exceedance trend (soft)", ok, "; ".join(lines), dt, 45 * 60)
    if not ok:
        warnings.warn("exceedance trend criterion not met: " + "; ".join(lines))


@pytest.mark.slow
def test_c09_observable_bound(default_study):
    rep, _ = default_study
    bound = 1 + 1 / (2 * np.pi)
    ratio = max(u / e for p in rep.ok_paths for u, e in zip(p.sup_u_h1, p.sup_l2) if e > 0)
    ok = verdict(9, "velocity H1 multiplier bound", ratio <= bound, f"max sup|u-u_ref|_1 / sup|xi-xi_ref|_2 = {ratio:.4f} (bound {bound:.4f})")
    assert ok


@pytest.mark.slow
def test_c10_determinism(default_study, tmp_path):
    rep1, _ = default_study
    rep2 = pathwise_error_study(StudyConfig(workers=2))
    same = True
    for name, writer in (("errors.csv", io.write_error_csv), ("summary.csv", io.write_summary_csv)):
        writer(tmp_path / f"w1_{name}", rep1)
        writer(tmp_path / f"w2_{name}", rep2)
        same &= (tmp_path / f"w1_{name}").read_bytes() == (tmp_path / f"w2_{name}").read_bytes()
    ok = verdict(10, "determinism across worker counts", same, f"errors.csv and summary.csv byte-identical for workers 1 and 2: {same}")
    assert ok
