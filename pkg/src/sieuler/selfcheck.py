"""Quick invariant sweep used by ``sieuler selfcheck``.

Each check is small enough that the whole table runs in a few seconds.
"""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np

from . import spectral as sp
from .convergence import fit_order
from .noise import build_spectrum, sample_brownian_table, w_increment_velocity, wcurl_increment, zero_table
from .stepper import StepperConfig, implicit_transport_solve, simulate_path

CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = []


def check(name):
    def deco(fn):
        CHECKS.append((name, fn))
        return fn

    return deco


def _rng(k=0):
    return np.random.default_rng(20240 + k)


@check("spectral: Parseval on grid")
def _parseval():
    xi = sp.random_smooth_field(6, _rng(), 0.0)
    a, b = sp.lp_grid_norm(xi, 2), sp.l2_norm(xi)
    err = abs(a - b) / b
    return err < 1e-12, f"rel err {err:.2e}"


@check("spectral: grid round trip")
def _roundtrip():
    xi = sp.random_smooth_field(4, _rng(1), 0.0)
    back = sp.grid_to_spectral(sp.evaluate_on_grid(xi, 16), 4)
    err = sp.l2_norm(back - xi) / sp.l2_norm(xi)
    return err < 1e-13, f"rel err {err:.2e}"


@check("spectral: Biot-Savart divergence-free and curl inverse")
def _biot():
    xi = sp.random_smooth_field(8, _rng(2), 1.0)
    u = sp.biot_savart(xi)
    div = float(np.max(np.abs(u.divergence_hat())))
    curl = float(np.max(np.abs(u.curl().coeffs - xi.coeffs)))
    return div == 0.0 and curl < 1e-13, f"max|k.u|={div:.1e}, curl err {curl:.1e}"


@check("spectral: transport skew-symmetry")
def _skew():
    rng = _rng(3)
    worst = 0.0
    for _ in range(10):
        xi, z = sp.random_smooth_field(16, rng, 0.0), sp.random_smooth_field(16, rng, 0.0)
        val = abs(sp.transport_term(xi, z).inner(z)) / (sp.l2_norm(xi) * sp.sobolev_norm(z, 1) ** 2)
        worst = max(worst, val)
    return worst <= 1e-10, f"max scaled <B z, z> {worst:.2e}"


@check("spectral: Leray orthogonality of pressure gradient")
def _leray():
    xi = sp.random_smooth_field(6, _rng(4), 1.0)
    p = sp.pressure_from_velocity(sp.biot_savart(xi))
    grad = sp.gradient_hat(p.hat())
    resid = sp.leray_project_hat(grad)
    val = float(np.max(np.abs(resid))) / max(float(np.max(np.abs(grad))), 1e-300)
    return val <= 1e-10, f"max |P grad pi| / |grad pi| {val:.2e}"


@check("noise: dyadic telescoping")
def _telescope():
    spec = build_spectrum(3, 1.0, 6.0)
    tab = sample_brownian_table(spec, 64, 1.0, 11, 2)
    ok = all(
        np.array_equal(
            wcurl_increment(spec, tab, l + 1, i).coeffs,
            (wcurl_increment(spec, tab, l, 2 * i) + wcurl_increment(spec, tab, l, 2 * i + 1)).coeffs,
        )
        for l in range(tab.n_levels - 1)
        for i in range(tab.steps(l + 1))
    )
    return ok, "bitwise" if ok else "mismatch"


@check("noise: determinism")
def _determinism():
    spec = build_spectrum(3, 1.0, 6.0)
    a = sample_brownian_table(spec, 32, 1.0, 5, 1)
    b = sample_brownian_table(spec, 32, 1.0, 5, 1)
    ok = np.array_equal(a.beta[0], b.beta[0])
    return ok, "identical" if ok else "differs"


@check("noise: velocity increment curl")
def _wvel():
    spec = build_spectrum(4, 1.0, 6.0)
    tab = sample_brownian_table(spec, 8, 1.0, 1, 0)
    w = w_increment_velocity(spec, tab, 1, 2)
    err = float(np.max(np.abs(w.curl().coeffs - wcurl_increment(spec, tab, 1, 2).coeffs)))
    return err < 1e-13, f"max err {err:.1e}"


@check("stepper: energy identity")
def _energy():
    rng = _rng(5)
    worst = 0.0
    for _ in range(5):
        xi = sp.random_smooth_field(16, rng, 0.0)
        out = implicit_transport_solve(xi, StepperConfig(1e-2, guard=False))
        n2 = sp.l2_norm(xi) ** 2
        worst = max(worst, abs(sp.l2_norm(out) ** 2 + sp.l2_norm(xi - out) ** 2 - n2) / n2)
    return worst <= 1e-10, f"max rel defect {worst:.2e}"


@check("stepper: fixed-point vs dense")
def _dense():
    xi = sp.random_smooth_field(4, _rng(6), 0.0)
    a = implicit_transport_solve(xi, StepperConfig(0.05, guard=False))
    b = implicit_transport_solve(xi, StepperConfig(0.05, solver="dense", guard=False))
    err = sp.l2_norm(a - b)
    return err <= 1e-10, f"L2 diff {err:.2e}"


@check("stepper: steady single mode")
def _steady():
    N = 4
    xi0 = sp.field_from_modes([((1, 0), 1.0)], N)
    spec = build_spectrum(N, 0.0, 6.0, allow_zero=True)
    traj = simulate_path(xi0, spec, zero_table(N, 64, 1.0), 0)
    dev = max(float(np.max(np.abs(x.coeffs - xi0.coeffs))) for x in traj.states)
    return dev <= 1e-12, f"max deviation {dev:.1e}"


@check("lab: order fit on exact power law")
def _fit():
    taus = [2.0**-j for j in range(2, 7)]
    fit = fit_order([(t, 3.0 * t**0.5) for t in taus])
    err = abs(fit.slope - 0.5)
    return err <= 1e-12, f"slope error {err:.1e}"


def run_selfcheck(stream=None) -> bool:
    """Run every check, print a pass/fail table, return overall success."""
    import sys

    stream = stream or sys.stdout
    all_ok = True
    width = max(len(n) for n, _ in CHECKS)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, fn in CHECKS:
            try:
                ok, detail = fn()
            except Exception as exc:  # a crashing check is a failing check
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            all_ok &= bool(ok)
            print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}", file=stream)
    return all_ok
