"""Truncated Fourier representation of mean-zero periodic fields on the unit torus.

Scalar fields are stored by their coefficients on the real orthonormal basis

    e_k(x) = sqrt(2) cos(2 pi k.x)   for k in Z2_+  (k1 > 0, or k1 = 0 and k2 > 0)
    e_k(x) = sqrt(2) sin(2 pi k.x)   for k in Z2_- = -Z2_+

on the square index set Lambda_N = {k != 0 : max(|k1|, |k2|) <= N}.  The
coefficient array is (2N+1, 2N+1) with entry [k1 + N, k2 + N]; the centre
entry (zero mode) is always 0.

Transforms go through the complex exponential basis exp(2 pi i k.x).  The
fixed mapping between the two layouts is, for k in Z2_+,

    xi_hat(k)  = (a_k + i a_{-k}) / sqrt(2)
    xi_hat(-k) = conj(xi_hat(k))

and conversely a_k = sqrt(2) Re xi_hat(k), a_{-k} = sqrt(2) Im xi_hat(k).

Velocity fields are kept in the complex layout only, shape (2, 2N+1, 2N+1),
with Hermitian symmetry u_hat(-k) = conj(u_hat(k)).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

SQRT2 = np.sqrt(2.0)
TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# index helpers
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _wavenumbers(N: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(-N, N + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    k1.setflags(write=False)
    k2.setflags(write=False)
    return k1, k2


def wavenumbers(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer wave-vector components (k1, k2) laid out like a coefficient array."""
    return _wavenumbers(int(N))


@lru_cache(maxsize=None)
def _positive_mask(N: int) -> np.ndarray:
    k1, k2 = _wavenumbers(N)
    mask = (k1 > 0) | ((k1 == 0) & (k2 > 0))
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=None)
def _k_squared(N: int) -> np.ndarray:
    """|k|^2 with the zero mode set to 1 so it can sit in a denominator."""
    k1, k2 = _wavenumbers(N)
    ksq = (k1 * k1 + k2 * k2).astype(float)
    ksq[N, N] = 1.0
    ksq.setflags(write=False)
    return ksq


def mode_list(N: int) -> list[tuple[int, int]]:
    """All modes of Lambda_N in lexicographic (k1, k2) order."""
    return [
        (k1, k2)
        for k1 in range(-N, N + 1)
        for k2 in range(-N, N + 1)
        if (k1, k2) != (0, 0)
    ]


def galerkin_dim(N: int) -> int:
    return (2 * N + 1) ** 2 - 1


def dealiased_grid_size(N: int) -> int:
    """Smallest power of two M with M >= 3N + 1.

    With this padding the product of two Lambda_N band-limited functions has
    no alias landing back inside Lambda_N.
    """
    M = 1
    while M < 3 * N + 1:
        M *= 2
    return M


# ---------------------------------------------------------------------------
# layout conversion
# ---------------------------------------------------------------------------


def real_to_hat(coeffs: np.ndarray) -> np.ndarray:
    """Real-basis coefficients -> Hermitian complex coefficients (same shape)."""
    N = (coeffs.shape[-1] - 1) // 2
    flip = coeffs[..., ::-1, ::-1]
    pos = _positive_mask(N)
    return np.where(pos, coeffs + 1j * flip, flip - 1j * coeffs) / SQRT2


def hat_to_real(hat: np.ndarray) -> np.ndarray:
    """Inverse of :func:`real_to_hat`; assumes Hermitian input."""
    N = (hat.shape[-1] - 1) // 2
    pos = _positive_mask(N)
    out = np.where(pos, SQRT2 * hat.real, -SQRT2 * hat.imag)
    out[..., N, N] = 0.0
    return out


def _embed(hat: np.ndarray, M: int) -> np.ndarray:
    """Place centred (..., 2N+1, 2N+1) coefficients into an FFT-ordered M x M array."""
    N = (hat.shape[-1] - 1) // 2
    out = np.zeros(hat.shape[:-2] + (M, M), dtype=complex)
    idx = np.arange(-N, N + 1) % M
    out[..., idx[:, None], idx[None, :]] = hat
    return out


def _extract(spec: np.ndarray, N: int) -> np.ndarray:
    M = spec.shape[-1]
    idx = np.arange(-N, N + 1) % M
    return spec[..., idx[:, None], idx[None, :]]


def hat_to_grid(hat: np.ndarray, M: int) -> np.ndarray:
    """Sample sum_k hat(k) exp(2 pi i k.x) at x = (a/M, b/M); result[..., a, b]."""
    return np.fft.ifft2(_embed(hat, M), axes=(-2, -1)).real * (M * M)


def grid_to_hat(values: np.ndarray, N: int) -> np.ndarray:
    M = values.shape[-1]
    spec = np.fft.fft2(values, axes=(-2, -1)) / (M * M)
    return _extract(spec, N)


# ---------------------------------------------------------------------------
# field types
# ---------------------------------------------------------------------------


class SpectralError(ValueError):
    """Invalid mode, truncation or grid request."""


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Mean-zero real scalar field on Lambda_N, real orthonormal basis."""

    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.N < 1:
            raise SpectralError(f"truncation radius must be positive, got {self.N}")
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (2 * self.N + 1, 2 * self.N + 1):
            raise SpectralError(
                f"coefficient array has shape {c.shape}, expected {(2 * self.N + 1,) * 2}"
            )
        c[self.N, self.N] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, N: int) -> "SpectralField":
        return cls(N, np.zeros((2 * N + 1, 2 * N + 1)))

    @classmethod
    def from_hat(cls, hat: np.ndarray) -> "SpectralField":
        N = (hat.shape[-1] - 1) // 2
        return cls(N, hat_to_real(hat))

    def hat(self) -> np.ndarray:
        return real_to_hat(self.coeffs)

    def __getitem__(self, k: tuple[int, int]) -> float:
        k1, k2 = k
        if max(abs(k1), abs(k2)) > self.N:
            return 0.0
        return float(self.coeffs[k1 + self.N, k2 + self.N])

    def items(self) -> Iterable[tuple[tuple[int, int], float]]:
        for k1, k2 in mode_list(self.N):
            yield (k1, k2), float(self.coeffs[k1 + self.N, k2 + self.N])

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_N(self, other)
        return SpectralField(self.N, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_N(self, other)
        return SpectralField(self.N, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.N, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.N, -self.coeffs)

    def inner(self, other: "SpectralField") -> float:
        _check_same_N(self, other)
        return float(np.sum(self.coeffs * other.coeffs))

    def __repr__(self) -> str:
        nnz = int(np.count_nonzero(self.coeffs))
        return f"SpectralField(N={self.N}, nonzero={nnz}, l2={l2_norm(self):.6g})"


@dataclass(frozen=True, eq=False)
class VelocityField:
    """Divergence-free mean-zero vector field, complex layout (2, 2N+1, 2N+1)."""

    N: int
    hat: np.ndarray

    def __post_init__(self):
        h = np.array(self.hat, dtype=complex)
        if h.shape != (2, 2 * self.N + 1, 2 * self.N + 1):
            raise SpectralError(f"velocity array has shape {h.shape}")
        h[:, self.N, self.N] = 0.0
        h.setflags(write=False)
        object.__setattr__(self, "hat", h)

    def __sub__(self, other: "VelocityField") -> "VelocityField":
        if other.N != self.N:
            raise SpectralError(f"truncation mismatch: N={self.N} vs N={other.N}")
        return VelocityField(self.N, self.hat - other.hat)

    def divergence_hat(self) -> np.ndarray:
        """k . u_hat(k) for every stored mode (identically zero for valid fields)."""
        k1, k2 = wavenumbers(self.N)
        return k1 * self.hat[0] + k2 * self.hat[1]

    def curl(self) -> SpectralField:
        """Scalar curl d1 u2 - d2 u1, computed on coefficients."""
        k1, k2 = wavenumbers(self.N)
        curl_hat = 2j * np.pi * (k1 * self.hat[1] - k2 * self.hat[0])
        return SpectralField.from_hat(curl_hat)

    def on_grid(self, M: int) -> np.ndarray:
        """Components sampled on the M x M grid, shape (2, M, M), [c, a, b] layout."""
        _check_grid(self.N, M)
        return hat_to_grid(self.hat, M)


def _check_same_N(a, b) -> None:
    if a.N != b.N:
        raise SpectralError(f"truncation mismatch: N={a.N} vs N={b.N}")


def _check_grid(N: int, M: int) -> None:
    if M < 2 * N + 2:
        raise SpectralError(f"grid size M={M} too small for N={N}; need M >= {2 * N + 2}")


# ---------------------------------------------------------------------------
# construction and projection
# ---------------------------------------------------------------------------


def field_from_modes(entries: Sequence[tuple[tuple[int, int], float]], N: int) -> SpectralField:
    """Build a field from explicit (mode, coefficient) pairs; other modes are zero."""
    if N < 1:
        raise SpectralError(f"truncation radius must be positive, got {N}")
    coeffs = np.zeros((2 * N + 1, 2 * N + 1))
    for (k1, k2), value in entries:
        if (k1, k2) == (0, 0):
            raise SpectralError("zero mode (0, 0) is excluded: fields are mean-zero")
        if max(abs(k1), abs(k2)) > N:
            raise SpectralError(f"mode ({k1}, {k2}) lies outside Lambda_{N}")
        coeffs[k1 + N, k2 + N] = value
    return SpectralField(N, coeffs)


def galerkin_project(xi: SpectralField, N: int) -> SpectralField:
    """Orthogonal projection onto span{e_k : k in Lambda_N}, N <= xi.N."""
    if N <= 0:
        raise SpectralError(f"projection radius must be positive, got {N}")
    if N > xi.N:
        raise SpectralError(f"cannot project N={xi.N} field onto larger Lambda_{N}")
    d = xi.N - N
    return SpectralField(N, xi.coeffs[d : d + 2 * N + 1, d : d + 2 * N + 1])


def embed(xi: SpectralField, N: int) -> SpectralField:
    """Zero-pad a field onto a larger truncation Lambda_N."""
    if N < xi.N:
        raise SpectralError(f"cannot embed N={xi.N} field into smaller Lambda_{N}")
    out = np.zeros((2 * N + 1, 2 * N + 1))
    d = N - xi.N
    out[d : d + 2 * xi.N + 1, d : d + 2 * xi.N + 1] = xi.coeffs
    return SpectralField(N, out)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def biot_savart_hat(hat: np.ndarray) -> np.ndarray:
    """u_hat(k) = i xi_hat(k) k_perp / (2 pi |k|^2), k_perp = (k2, -k1)."""
    N = (hat.shape[-1] - 1) // 2
    k1, k2 = wavenumbers(N)
    factor = 1j * hat / (TWO_PI * _k_squared(N))
    # Shorten the mantissa so k1*factor and k2*factor are exact products;
    # k . u_hat then cancels to exactly zero in floating point.
    bits = 53 - int(N).bit_length()
    factor = _round_mantissa(factor.real, bits) + 1j * _round_mantissa(factor.imag, bits)
    return np.stack([k2 * factor, -k1 * factor])


def _round_mantissa(x: np.ndarray, bits: int) -> np.ndarray:
    m, e = np.frexp(x)
    return np.ldexp(np.round(np.ldexp(m, bits)), e - bits)


def biot_savart(xi: SpectralField) -> VelocityField:
    """Velocity K*xi of the vorticity xi: divergence free with curl equal to xi."""
    return VelocityField(xi.N, biot_savart_hat(xi.hat()))


def gradient_hat(hat: np.ndarray) -> np.ndarray:
    N = (hat.shape[-1] - 1) // 2
    k1, k2 = wavenumbers(N)
    return np.stack([TWO_PI * 1j * k1 * hat, TWO_PI * 1j * k2 * hat])


class GridBuffer:
    """M x M physical-space samples; values[b, a] = f(a/M, b/M).

    Rows index the second coordinate and columns the first, so a field that
    depends on x1 only varies along each row.
    """

    __slots__ = ("M", "values")

    def __init__(self, values: np.ndarray):
        v = np.asarray(values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise SpectralError(f"grid buffer must be square, got shape {v.shape}")
        self.M = v.shape[0]
        self.values = v

    def __repr__(self) -> str:
        return f"GridBuffer(M={self.M})"


def evaluate_on_grid(xi: SpectralField, M: int) -> GridBuffer:
    _check_grid(xi.N, M)
    return GridBuffer(hat_to_grid(xi.hat(), M).T)


def grid_to_spectral(buffer: GridBuffer, N: int) -> SpectralField:
    """Project grid samples onto Lambda_N; the mean (zero mode) is discarded."""
    _check_grid(N, buffer.M)
    return SpectralField.from_hat(grid_to_hat(buffer.values.T, N))


class TransportOperator:
    """The linear map zeta -> Pi_N[(K*xi) . grad zeta] for a fixed advecting field.

    The velocity is sampled once on the padded grid; each application then
    costs two inverse transforms and one forward transform.  Works directly
    on Hermitian complex coefficient arrays; a leading batch axis is allowed.
    """

    def __init__(self, xi_adv: SpectralField, M: int | None = None):
        self.N = xi_adv.N
        self.M = dealiased_grid_size(self.N) if M is None else int(M)
        if self.M < 3 * self.N + 1:
            raise SpectralError(f"padded grid M={self.M} aliases products on Lambda_{self.N}")
        self.u_grid = hat_to_grid(biot_savart_hat(xi_adv.hat()), self.M)

    def apply_hat(self, zeta_hat: np.ndarray) -> np.ndarray:
        grad = hat_to_grid(gradient_hat(zeta_hat), self.M)
        if grad.ndim == 4:
            # batch layout: gradient_hat stacks components first
            grad = np.moveaxis(grad, 0, 1)
            prod = self.u_grid[0] * grad[:, 0] + self.u_grid[1] * grad[:, 1]
        else:
            prod = self.u_grid[0] * grad[0] + self.u_grid[1] * grad[1]
        out = grid_to_hat(prod, self.N)
        out[..., self.N, self.N] = 0.0
        return out

    def apply(self, zeta: SpectralField) -> SpectralField:
        _check_same_N(self, zeta)
        return SpectralField.from_hat(self.apply_hat(zeta.hat()))

    def max_speed(self) -> float:
        return float(np.sqrt(np.max(self.u_grid[0] ** 2 + self.u_grid[1] ** 2)))

    def complex_matrix(self) -> np.ndarray:
        """Operator matrix on the exponential basis (modes of :func:`mode_list`).

        Entry [q, p] = 2 pi i u_hat(q - p) . p; exact because the product is
        band-limited to 2N and the velocity to N.
        """
        N = self.N
        k1 = np.array([m[0] for m in mode_list(N)])
        k2 = np.array([m[1] for m in mode_list(N)])
        u_hat = grid_to_hat(self.u_grid, N)
        d1 = k1[:, None] - k1[None, :]
        d2 = k2[:, None] - k2[None, :]
        inside = (np.abs(d1) <= N) & (np.abs(d2) <= N)
        i1 = np.where(inside, d1 + N, N)
        i2 = np.where(inside, d2 + N, N)
        C = TWO_PI * 1j * (u_hat[0][i1, i2] * k1[None, :] + u_hat[1][i1, i2] * k2[None, :])
        C[~inside] = 0.0
        return C

    def matrix(self) -> np.ndarray:
        """Operator matrix on the real basis, modes in lexicographic order."""
        H, H_inv = layout_matrices(self.N)
        return (H_inv @ self.complex_matrix() @ H).real


@lru_cache(maxsize=8)
def layout_matrices(N: int) -> tuple[np.ndarray, np.ndarray]:
    """(H, H^-1) with hat_vec = H @ real_vec over the modes of :func:`mode_list`."""
    modes = mode_list(N)
    D = len(modes)
    pos = {m: i for i, m in enumerate(modes)}
    H = np.zeros((D, D), dtype=complex)
    s = 1.0 / SQRT2
    for i, (k1, k2) in enumerate(modes):
        j = pos[(-k1, -k2)]
        if k1 > 0 or (k1 == 0 and k2 > 0):
            H[i, i], H[i, j] = s, 1j * s
        else:
            H[i, j], H[i, i] = s, -1j * s
    H_inv = H.conj().T
    H.setflags(write=False)
    H_inv.setflags(write=False)
    return H, H_inv


def transport_term(xi_adv: SpectralField, zeta: SpectralField) -> SpectralField:
    """B(xi_adv) zeta = Pi_N[(K*xi_adv) . grad zeta], computed without aliasing."""
    _check_same_N(xi_adv, zeta)
    return TransportOperator(xi_adv).apply(zeta)


def convection_hat(u_hat: np.ndarray, M: int | None = None) -> np.ndarray:
    """(u . grad) u on Lambda_N, complex layout (2, 2N+1, 2N+1), dealiased."""
    N = (u_hat.shape[-1] - 1) // 2
    M = dealiased_grid_size(N) if M is None else M
    u = hat_to_grid(u_hat, M)
    out = []
    for c in range(2):
        g = hat_to_grid(gradient_hat(u_hat[c]), M)
        out.append(grid_to_hat(u[0] * g[0] + u[1] * g[1], N))
    return np.stack(out)


def pressure_from_velocity(u: VelocityField) -> SpectralField:
    """Mean-zero pressure with grad pi = (P - Id)(u . grad) u.

    Taking the divergence gives  Laplace(pi) = -div[(u . grad) u], so
    pi_hat(q) = i q . F_hat(q) / (2 pi |q|^2) with F the convection term.
    """
    N = u.N
    F = convection_hat(u.hat)
    k1, k2 = wavenumbers(N)
    p_hat = 1j * (k1 * F[0] + k2 * F[1]) / (TWO_PI * _k_squared(N))
    p_hat[N, N] = 0.0
    return SpectralField.from_hat(p_hat)


def leray_project_hat(v_hat: np.ndarray) -> np.ndarray:
    """Divergence-free part P v of a vector field in complex layout."""
    N = (v_hat.shape[-1] - 1) // 2
    k1, k2 = wavenumbers(N)
    kdotv = (k1 * v_hat[0] + k2 * v_hat[1]) / _k_squared(N)
    out = np.stack([v_hat[0] - k1 * kdotv, v_hat[1] - k2 * kdotv])
    out[:, N, N] = 0.0
    return out


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def l2_norm(xi: SpectralField) -> float:
    return float(np.sqrt(np.sum(xi.coeffs**2)))


def _sobolev_weight(N: int, m: float) -> np.ndarray:
    k1, k2 = wavenumbers(N)
    return (1.0 + TWO_PI**2 * (k1 * k1 + k2 * k2)) ** m


def sobolev_norm(field: SpectralField | VelocityField, m: int) -> float:
    """H^m norm with weight (1 + (2 pi |k|)^2)^m; vector fields sum components."""
    if m < 0 or int(m) != m:
        raise SpectralError(f"Sobolev index must be a nonnegative integer, got {m}")
    w = _sobolev_weight(field.N, m)
    if isinstance(field, VelocityField):
        return float(np.sqrt(np.sum(w * np.abs(field.hat) ** 2)))
    return float(np.sqrt(np.sum(w * field.coeffs**2)))


def lp_grid_norm(xi: SpectralField, p: float, M: int | None = None) -> float:
    """Quadrature L^p norm on the M x M grid (monitoring accuracy for p != 2)."""
    if not p >= 1:
        raise SpectralError(f"L^p exponent must be >= 1, got {p}")
    M = dealiased_grid_size(xi.N) if M is None else M
    _check_grid(xi.N, M)
    vals = np.abs(hat_to_grid(xi.hat(), M))
    if np.isinf(p):
        return float(vals.max())
    return float(np.mean(vals**p) ** (1.0 / p))


def random_smooth_field(N: int, rng: np.random.Generator, decay: float = 4.0) -> SpectralField:
    """Coefficients |k|^-decay times independent standard normals."""
    ksq = _k_squared(N)
    c = rng.standard_normal((2 * N + 1, 2 * N + 1)) * ksq ** (-decay / 2.0)
    return SpectralField(N, c)


def preset_three_mode(N: int) -> SpectralField:
    """e_(1,0) + e_(0,1) + 0.5 e_(1,1)."""
    return field_from_modes([((1, 0), 1.0), ((0, 1), 1.0), ((1, 1), 0.5)], N)
