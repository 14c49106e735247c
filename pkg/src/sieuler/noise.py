"""Q-Wiener curl noise with isotropic power-law spectrum and dyadic Brownian tables.

The velocity noise is W(t) = sum_k c_k beta_k(t) g_k with c_k = c0 |k|^-r, and
the vorticity equation is driven by its curl, whose coefficient on e_k has
amplitude sigma_k = 2 pi |k| c_k.  Because the spectrum is isotropic, the sign
flip and relabelling k -> -k that appears when taking the curl maps an i.i.d.
family of Wiener processes onto another i.i.d. family with the same law, so
each mode simply gets its own independent Brownian motion.

A BrownianTable holds the increments of every mode at the finest resolution
together with the dyadic pyramid of pairwise sums, so a coarse increment is
always the exact (bitwise) sum of the two finer increments it covers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    TWO_PI,
    SpectralField,
    VelocityField,
    biot_savart,
    wavenumbers,
)

SMOOTHNESS_H = 4.5  # noise regularity index required for the convergence theory


class NoiseAssumptionWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class NoiseSpectrum:
    N: int
    c0: float
    r: float
    sigma: np.ndarray = field(repr=False)
    satisfies_assumption: bool = True

    def c(self) -> np.ndarray:
        """Velocity amplitudes c_k (0 at the zero mode)."""
        k1, k2 = wavenumbers(self.N)
        kabs = np.sqrt(k1 * k1 + k2 * k2)
        kabs[self.N, self.N] = 1.0
        out = self.sigma / (TWO_PI * kabs)
        out[self.N, self.N] = 0.0
        return out

    def curl_variance_rate(self) -> float:
        """sum_k sigma_k^2, so that E|dW_curl|_2^2 = tau * this."""
        return float(np.sum(self.sigma**2))


def build_spectrum(N: int, c0: float, r: float, *, allow_zero: bool = False) -> NoiseSpectrum:
    """sigma_k = 2 pi |k| c0 |k|^-r on Lambda_N.

    ``allow_zero`` admits c0 = 0 for deterministic runs; otherwise c0 must be
    positive.  Decay exponents r <= h + 1 = 11/2 leave the untruncated noise
    too rough for the convergence theory and trigger a warning.
    """
    if N < 1:
        raise ValueError(f"truncation radius must be positive, got {N}")
    if c0 < 0 or (c0 == 0 and not allow_zero):
        raise ValueError(f"noise amplitude c0 must be positive, got {c0}")
    ok = r > SMOOTHNESS_H + 1
    if not ok:
        warnings.warn(
            f"decay exponent r={r} <= {SMOOTHNESS_H + 1}: noise regularity assumption "
            "fails in the untruncated limit",
            NoiseAssumptionWarning,
            stacklevel=2,
        )
    k1, k2 = wavenumbers(N)
    kabs = np.sqrt(k1 * k1 + k2 * k2)
    kabs[N, N] = 1.0
    sigma = TWO_PI * c0 * kabs ** (1.0 - r)
    sigma[N, N] = 0.0
    sigma.setflags(write=False)
    return NoiseSpectrum(N=N, c0=float(c0), r=float(r), sigma=sigma, satisfies_assumption=ok)


def _mode_seed(master_seed: int, path_id: int, k1: int, k2: int) -> np.random.SeedSequence:
    # spawn keys must be non-negative
    return np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(int(path_id), k1 + 2**31, k2 + 2**31)
    )


def _pyramid(fine: np.ndarray) -> list[np.ndarray]:
    levels = [fine]
    while levels[-1].shape[0] % 2 == 0 and levels[-1].shape[0] > 1:
        prev = levels[-1]
        levels.append(prev[0::2] + prev[1::2])
    for lev in levels:
        lev.setflags(write=False)
    return levels


@dataclass(frozen=True, eq=False)
class BrownianTable:
    """Per-mode Brownian increments on a dyadic hierarchy of time grids.

    ``beta[l]`` has shape (n_fine / 2^l, 2N+1, 2N+1): level-l increments of the
    standard Brownian motions.  ``curl[l]`` is the same hierarchy for the
    sigma-weighted increments, built by pairwise summation from level 0 so
    that adjacent curl increments add up exactly to the next level.
    """

    N: int
    T: float
    n_fine: int
    master_seed: int
    path_id: int
    sigma: np.ndarray = field(repr=False)
    beta: list = field(repr=False)
    curl: list = field(repr=False)

    @property
    def dt_fine(self) -> float:
        return self.T / self.n_fine

    @property
    def n_levels(self) -> int:
        return len(self.beta)

    def steps(self, level: int) -> int:
        self._check_level(level)
        return self.n_fine >> level

    def tau(self, level: int) -> float:
        return self.T / self.steps(level)

    def level_for_steps(self, n: int) -> int:
        if n < 1 or self.n_fine % n:
            raise ValueError(f"{n} steps do not divide the finest grid of {self.n_fine}")
        ratio = self.n_fine // n
        level = ratio.bit_length() - 1
        if 1 << level != ratio or level >= self.n_levels:
            raise ValueError(f"{n} steps is not a dyadic coarsening of {self.n_fine}")
        return level

    def _check_level(self, level: int) -> None:
        if not 0 <= level < self.n_levels:
            raise ValueError(
                f"level {level} out of range: the table supports levels 0..{self.n_levels - 1}"
            )

    def _check_window(self, level: int, step: int) -> None:
        self._check_level(level)
        n = self.n_fine >> level
        if not 0 <= step < n:
            raise ValueError(f"step {step} outside level-{level} window range 0..{n - 1}")

    def beta_increment(self, level: int, step: int) -> np.ndarray:
        self._check_window(level, step)
        return self.beta[level][step]

    def curl_increment(self, level: int, step: int) -> np.ndarray:
        self._check_window(level, step)
        return self.curl[level][step]


def sample_brownian_table(
    spectrum: NoiseSpectrum, n_fine: int, T: float, master_seed: int, path_id: int
) -> BrownianTable:
    """Draw n_fine increments per mode from substreams keyed by (seed, path, k)."""
    if n_fine < 1:
        raise ValueError(f"n_fine must be positive, got {n_fine}")
    if not T > 0:
        raise ValueError(f"final time must be positive, got {T}")
    N = spectrum.N
    scale = np.sqrt(T / n_fine)
    fine = np.zeros((n_fine, 2 * N + 1, 2 * N + 1))
    for k1 in range(-N, N + 1):
        for k2 in range(-N, N + 1):
            if (k1, k2) == (0, 0):
                continue
            rng = np.random.Generator(np.random.PCG64(_mode_seed(master_seed, path_id, k1, k2)))
            fine[:, k1 + N, k2 + N] = rng.standard_normal(n_fine) * scale
    beta = _pyramid(fine)
    curl = _pyramid(fine * spectrum.sigma)
    return BrownianTable(
        N=N,
        T=float(T),
        n_fine=int(n_fine),
        master_seed=int(master_seed),
        path_id=int(path_id),
        sigma=spectrum.sigma,
        beta=beta,
        curl=curl,
    )


def zero_table(N: int, n_fine: int, T: float) -> BrownianTable:
    fine = np.zeros((n_fine, 2 * N + 1, 2 * N + 1))
    sigma = np.zeros((2 * N + 1, 2 * N + 1))
    return BrownianTable(N, float(T), n_fine, 0, 0, sigma, _pyramid(fine), _pyramid(fine.copy()))


def wcurl_increment(spectrum: NoiseSpectrum, table: BrownianTable, level: int, step: int) -> SpectralField:
    """Curl-noise increment sum_k sigma_k dbeta_k e_k over one level-l window."""
    if spectrum.N != table.N:
        raise ValueError(f"spectrum N={spectrum.N} does not match table N={table.N}")
    if np.any(table.sigma) and not np.array_equal(spectrum.sigma, table.sigma):
        raise ValueError("table was sampled with a different noise spectrum")
    return SpectralField(table.N, table.curl_increment(level, step))


def w_increment_velocity(
    spectrum: NoiseSpectrum, table: BrownianTable, level: int, step: int
) -> VelocityField:
    return biot_savart(wcurl_increment(spectrum, table, level, step))
