"""Splitting semi-implicit Euler steps for the stochastic vorticity equation.

One step maps xi_i to

    xibar = solution of (I + tau B(xi_i)) xibar = xi_i,   B(a) z = Pi_N[(K*a) . grad z]
    xi_{i+1} = xibar + dW_curl

The linear transport solve is the only nontrivial part.  B(a) is skew-symmetric
on Lambda_N, so the system is always uniquely solvable and the solution obeys
|xibar|^2 + |xi - xibar|^2 = |xi|^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import spectral as sp
from .noise import BrownianTable, NoiseSpectrum, wcurl_increment
from .spectral import SpectralField, TransportOperator, VelocityField


class SolverFailure(RuntimeError):
    """Implicit solve did not converge and no dense fallback was allowed."""

    def __init__(self, message: str, residual: float, step: int | None = None, diagnostics=None):
        super().__init__(message)
        self.residual = residual
        self.step = step
        self.diagnostics = diagnostics


class StepSizeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class StepperConfig:
    tau: float
    solver: Literal["fixed-point", "dense"] = "fixed-point"
    fp_tol: float = 1e-12
    fp_max_iter: int = 200
    dense_dim_cap: int = 4096
    guard: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"step size must be positive, got {self.tau}")
        if not self.fp_tol > 0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.fp_max_iter < 1:
            raise ValueError(f"fp_max_iter must be >= 1, got {self.fp_max_iter}")
        if self.solver not in ("fixed-point", "dense"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class SolveInfo:
    method: str
    iterations: int
    residual: float  # relative to |xi|_2


def _dense_solve(op: TransportOperator, xi: SpectralField, tau: float) -> tuple[SpectralField, float]:
    N = xi.N
    A = np.eye(sp.galerkin_dim(N)) + tau * op.complex_matrix()
    flat = np.array([(k1 + N) * (2 * N + 1) + k2 + N for k1, k2 in sp.mode_list(N)])
    b = xi.hat().reshape(-1)[flat]
    x = np.linalg.solve(A, b)
    res = float(np.linalg.norm(A @ x - b))
    out = np.zeros((2 * N + 1) ** 2, dtype=complex)
    out[flat] = x
    return SpectralField.from_hat(out.reshape(2 * N + 1, 2 * N + 1)), res


def _fixed_point(
    op: TransportOperator, xi_hat: np.ndarray, tau: float, tol: float, max_iter: int, x0: np.ndarray | None
) -> tuple[np.ndarray, float, int, bool]:
    """Richardson iteration x <- xi - tau B x; returns (x, residual, iterations, converged)."""
    x = xi_hat.copy() if x0 is None else x0.copy()
    best = np.inf
    res = np.inf
    for it in range(1, max_iter + 1):
        r = x + tau * op.apply_hat(x) - xi_hat
        res = float(np.sqrt(np.sum(np.abs(r) ** 2)))
        if res <= tol:
            return x, res, it - 1, True
        if res > 1e3 * best:
            return x, res, it, False
        best = min(best, res)
        x = x - r
    return x, res, max_iter, False


def implicit_transport_solve(
    xi: SpectralField,
    cfg: StepperConfig,
    *,
    initial_guess: SpectralField | None = None,
    info: list | None = None,
) -> SpectralField:
    """Solve (I + tau B(xi)) xibar = xi on Lambda_N.

    Fixed-point iteration is tried first (unless ``cfg.solver == "dense"``);
    if it stalls or diverges the dense matrix is assembled and factorised,
    provided the Galerkin dimension is at most ``cfg.dense_dim_cap``.
    """
    norm = sp.l2_norm(xi)
    if norm == 0.0:
        if info is not None:
            info.append(SolveInfo("trivial", 0, 0.0))
        return SpectralField.zeros(xi.N)
    op = TransportOperator(xi)
    if cfg.guard:
        est = 2.0 * np.pi * np.sqrt(2.0) * xi.N * op.max_speed()
        if cfg.tau * est >= 0.5:
            warnings.warn(
                f"tau * |B| estimate = {cfg.tau * est:.3g} >= 0.5; fixed-point contraction not guaranteed",
                StepSizeWarning,
                stacklevel=2,
            )
    dim = sp.galerkin_dim(xi.N)
    residual = np.inf
    if cfg.solver == "fixed-point":
        x0 = None if initial_guess is None else initial_guess.hat()
        x, res, iters, ok = _fixed_point(op, xi.hat(), cfg.tau, cfg.fp_tol * norm, cfg.fp_max_iter, x0)
        residual = res / norm
        if ok:
            if info is not None:
                info.append(SolveInfo("fixed-point", iters, residual))
            return SpectralField.from_hat(x)
    if dim > cfg.dense_dim_cap:
        raise SolverFailure(
            f"fixed-point solve did not converge (relative residual {residual:.3g}) and "
            f"Galerkin dimension {dim} exceeds dense cap {cfg.dense_dim_cap}",
            residual,
        )
    out, res = _dense_solve(op, xi, cfg.tau)
    if info is not None:
        info.append(SolveInfo("dense", 0, res / norm))
    return out


def sie_step(xi: SpectralField, dW: SpectralField, cfg: StepperConfig, *, info: list | None = None) -> SpectralField:
    if xi.N != dW.N:
        raise sp.SpectralError(f"truncation mismatch: N={xi.N} vs N={dW.N}")
    return implicit_transport_solve(xi, cfg, info=info) + dW


@dataclass
class StepDiagnostics:
    step: int
    method: str
    iterations: int
    residual: float
    l2: float
    l4: float


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    level: int
    meta: dict = field(default_factory=dict)
    diagnostics: list | None = None

    @property
    def n(self) -> int:
        return len(self.states) - 1

    @property
    def tau(self) -> float:
        return float(self.times[1] - self.times[0]) if self.n else 0.0


def simulate_path(
    xi0: SpectralField,
    spectrum: NoiseSpectrum,
    table: BrownianTable,
    level: int,
    cfg: StepperConfig | None = None,
    *,
    diagnostics: bool = False,
) -> Trajectory:
    """Run the scheme with the level-``level`` increments of ``table``.

    The step size is the one implied by the level (T 2^level / n_fine); any
    ``tau`` in ``cfg`` is overridden.  Step i+1 only reads the noise window
    [t_i, t_{i+1}].
    """
    if xi0.N != table.N:
        raise sp.SpectralError(f"initial field N={xi0.N} does not match table N={table.N}")
    n = table.steps(level)
    tau = table.tau(level)
    cfg = StepperConfig(tau=tau) if cfg is None else replace(cfg, tau=tau)
    states = [xi0]
    diag = [] if diagnostics else None
    xi = xi0
    for i in range(n):
        info: list = []
        try:
            xi = sie_step(xi, wcurl_increment(spectrum, table, level, i), cfg, info=info)
        except SolverFailure as exc:
            exc.step = i
            exc.diagnostics = diag
            raise
        states.append(xi)
        if diag is not None:
            s = info[-1]
            diag.append(StepDiagnostics(i + 1, s.method, s.iterations, s.residual, sp.l2_norm(xi), sp.lp_grid_norm(xi, 4)))
    times = tau * np.arange(n + 1)
    times[-1] = table.T
    meta = {
        "T": table.T,
        "n": n,
        "level": level,
        "seed": table.master_seed,
        "path_id": table.path_id,
        "N": xi0.N,
        "c0": spectrum.c0,
        "r": spectrum.r,
    }
    return Trajectory(times=times, states=states, level=level, meta=meta, diagnostics=diag)


def recover_observables(xi: SpectralField) -> tuple[VelocityField, SpectralField]:
    """Velocity K*xi and the pressure it generates."""
    u = sp.biot_savart(xi)
    return u, sp.pressure_from_velocity(u)
