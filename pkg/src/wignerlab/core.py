"""Grids, fields, Gaussian data and the spectral utilities shared by all solvers.

Phase-space arrays are stored x-major: ``values[i, m]`` is the sample at
``(x_i, k_m)``.  Both axes are periodic for spectral operations; the data
is expected to decay well inside the box so the periodic closure in k is
harmless.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, GridMismatchError

_WORKERS = 1

#: data must fall below this fraction of its peak at the edges of the box
DECAY_TOLERANCE = 1e-10


def set_threads(n: Optional[int]) -> None:
    """Set the worker count used by every FFT in the package."""
    global _WORKERS
    _WORKERS = max(1, int(n)) if n else 1


def get_threads() -> int:
    return _WORKERS


def fft(a, axis=-1):
    return sfft.fft(a, axis=axis, workers=_WORKERS)


def ifft(a, axis=-1):
    return sfft.ifft(a, axis=axis, workers=_WORKERS)


def dyadic_epsilon(n: int) -> float:
    """Rescaled Planck constant of the form pi^-1 * 2^-n."""
    return 2.0 ** (-n) / math.pi


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class PhaseGrid:
    x_min: float
    x_max: float
    n_x: int
    k_min: float
    k_max: float
    n_k: int
    periodic_x: bool = True

    def __post_init__(self):
        problems = []
        if not self.x_max > self.x_min:
            problems.append(f"x bounds inverted: [{self.x_min}, {self.x_max}]")
        if not self.k_max > self.k_min:
            problems.append(f"k bounds inverted: [{self.k_min}, {self.k_max}]")
        for name in ("n_x", "n_k"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or not _is_pow2(int(n)):
                problems.append(f"{name}={n} must be a power of two >= 8")
        if problems:
            raise ConfigurationError("; ".join(problems), problems)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def dk(self) -> float:
        return (self.k_max - self.k_min) / self.n_k

    @property
    def length_x(self) -> float:
        return self.x_max - self.x_min

    @property
    def length_k(self) -> float:
        return self.k_max - self.k_min

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_x)

    @property
    def k(self) -> np.ndarray:
        return self.k_min + self.dk * np.arange(self.n_k)

    @property
    def xi(self) -> np.ndarray:
        """Angular spatial frequencies in FFT order (dual of x, also the p-lattice)."""
        return 2 * np.pi * sfft.fftfreq(self.n_x, self.dx)

    @property
    def y(self) -> np.ndarray:
        """Dual variable of k in FFT order; the Nyquist entry sits at n_k // 2."""
        return 2 * np.pi * sfft.fftfreq(self.n_k, self.dk)

    @property
    def dy(self) -> float:
        return 2 * np.pi / self.length_k

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_k)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.k, indexing="ij")

    def refined(self, factor: int = 2) -> "PhaseGrid":
        return PhaseGrid(self.x_min, self.x_max, self.n_x * factor,
                         self.k_min, self.k_max, self.n_k * factor)


def make_phase_grid(x_min, x_max, n_x, k_min, k_max, n_k) -> PhaseGrid:
    return PhaseGrid(float(x_min), float(x_max), int(n_x), float(k_min), float(k_max), int(n_k))


def _same_grid(a: PhaseGrid, b: PhaseGrid, x_only: bool = False) -> bool:
    if x_only:
        return (a.x_min, a.x_max, a.n_x) == (b.x_min, b.x_max, b.n_x)
    return a == b


def require_same_grid(a: PhaseGrid, b: PhaseGrid, x_only: bool = False) -> None:
    if not _same_grid(a, b, x_only):
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


# ---------------------------------------------------------------- fields


@dataclass(frozen=True)
class ComplexField:
    """Wavefunction samples on the x-axis of a grid."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n_x,):
            raise GridMismatchError(f"expected {self.grid.n_x} samples, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite samples")
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return math.sqrt(l2_inner_product(self, self).real)

    def __mul__(self, c):
        return ComplexField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PhaseField:
    """Distribution sampled on a PhaseGrid, shape (n_x, n_k)."""

    grid: PhaseGrid
    values: np.ndarray
    hermitian_real: bool = False

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise GridMismatchError(f"expected shape {self.grid.shape}, got {v.shape}")
        if self.hermitian_real:
            peak = np.max(np.abs(v)) if v.size else 0.0
            if np.iscomplexobj(v):
                if np.max(np.abs(v.imag)) > 1e-10 * peak:
                    raise ValueError("field flagged real has a significant imaginary part")
                v = v.real
        object.__setattr__(self, "values", v)

    def mass(self) -> complex:
        g = self.grid
        return complex(np.sum(self.values) * g.dx * g.dk)

    def inner(self, other: "PhaseField") -> complex:
        require_same_grid(self.grid, other.grid)
        g = self.grid
        return complex(np.sum(self.values * np.conj(other.values)) * g.dx * g.dk)

    def l2_norm(self) -> float:
        g = self.grid
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * g.dx * g.dk))

    def __mul__(self, c):
        real = self.hermitian_real and np.isrealobj(c)
        return PhaseField(self.grid, self.values * c, real)

    __rmul__ = __mul__


# ---------------------------------------------------------------- potentials and Gaussian data


@dataclass(frozen=True)
class GaussianSpec:
    """amplitude * exp(-(x-cx)^2/wx^2 [- (k-ck)^2/wk^2]).

    Doubles as the background potential family and as phase-space data.
    """

    amplitude: float
    center_x: float
    width_x: float
    center_k: Optional[float] = None
    width_k: Optional[float] = None

    def __post_init__(self):
        if not self.width_x > 0:
            raise ConfigurationError("width_x must be positive")
        if self.width_k is not None and not self.width_k > 0:
            raise ConfigurationError("width_k must be positive")

    @property
    def has_k(self) -> bool:
        return self.center_k is not None and self.width_k is not None

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-((x - self.center_x) / self.width_x) ** 2)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.center_x) / self.width_x
        return -2.0 * self.amplitude * u / self.width_x * np.exp(-u * u)

    def phase_value(self, x, k):
        if not self.has_k:
            raise ConfigurationError("Gaussian has no momentum component")
        x = np.asarray(x, dtype=float)
        k = np.asarray(k, dtype=float)
        return self.amplitude * np.exp(-((x - self.center_x) / self.width_x) ** 2
                                       - ((k - self.center_k) / self.width_k) ** 2)

    def phase_grad(self, x, k):
        """Analytic (d/dx, d/dk) of the phase-space Gaussian."""
        f = self.phase_value(x, k)
        return (-2.0 * (np.asarray(x) - self.center_x) / self.width_x ** 2 * f,
                -2.0 * (np.asarray(k) - self.center_k) / self.width_k ** 2 * f)


@dataclass(frozen=True)
class Polynomial:
    """sum_n coeffs[n] * x**n; used as exactly solvable test potentials."""

    coeffs: tuple

    def value(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coeffs)

    def grad(self, x):
        d = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else [0.0]
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), d)


@dataclass(frozen=True)
class Sinusoid:
    """amplitude * cos(wavenumber * x + phase)."""

    amplitude: float
    wavenumber: float
    phase: float = 0.0

    def value(self, x):
        return self.amplitude * np.cos(self.wavenumber * np.asarray(x, dtype=float) + self.phase)

    def grad(self, x):
        return -self.amplitude * self.wavenumber * np.sin(
            self.wavenumber * np.asarray(x, dtype=float) + self.phase)


@dataclass(frozen=True)
class Shifted:
    """A potential plus a constant offset."""

    base: object
    offset: float

    def value(self, x):
        return self.base.value(x) + self.offset

    def grad(self, x):
        return self.base.grad(x)


@dataclass(frozen=True)
class Scaled:
    base: object
    factor: float

    def value(self, x):
        return self.factor * self.base.value(x)

    def grad(self, x):
        return self.factor * self.base.grad(x)


def eval_potential(spec, x):
    return spec.value(x)


def grad_potential(spec, x):
    return spec.grad(x)


def delta_eps_potential(spec, x, y, eps: float):
    """(V(x + eps*y/2) - V(x - eps*y/2)) / eps."""
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = 0.5 * eps * y
    return (spec.value(x + h) - spec.value(x - h)) / eps


def edge_ratio(values: np.ndarray) -> float:
    """Largest boundary sample relative to the peak, over every axis."""
    v = np.abs(np.asarray(values))
    peak = v.max() if v.size else 0.0
    if peak == 0:
        return 0.0
    edges = []
    for ax in range(v.ndim):
        edges.append(np.take(v, 0, axis=ax).max())
        edges.append(np.take(v, -1, axis=ax).max())
    return float(max(edges) / peak)


def check_decay(values: np.ndarray, what: str = "data", tol: float = DECAY_TOLERANCE) -> float:
    ratio = edge_ratio(values)
    if ratio > tol:
        warnings.warn(f"{what} is {ratio:.2e} of its peak at the box edge (tolerance {tol:.0e})",
                      BoundaryDecayWarning, stacklevel=2)
    return ratio


class BoundaryDecayWarning(UserWarning):
    pass


def gaussian_phase_field(spec: GaussianSpec, grid: PhaseGrid) -> PhaseField:
    if not spec.has_k:
        raise ConfigurationError("phase-space Gaussian needs center_k and width_k")
    X, K = grid.mesh()
    vals = spec.phase_value(X, K)
    check_decay(vals, "Gaussian phase-space data")
    return PhaseField(grid, vals, hermitian_real=True)


def gaussian_packet(spec: GaussianSpec, grid: PhaseGrid, eps: float) -> ComplexField:
    """Semiclassical packet amp * exp(-(x-c)^2/(2w^2)) * exp(i k0 x / eps)."""
    x = grid.x
    k0 = spec.center_k or 0.0
    env = spec.amplitude * np.exp(-((x - spec.center_x) ** 2) / (2 * spec.width_x ** 2))
    vals = env * np.exp(1j * k0 * x / eps) if k0 else env.astype(complex)
    check_decay(env, "wave packet")
    return ComplexField(grid, vals)


def l2_inner_product(a: ComplexField, b: ComplexField) -> complex:
    require_same_grid(a.grid, b.grid, x_only=True)
    return complex(np.sum(a.values * np.conj(b.values)) * a.grid.dx)


# ---------------------------------------------------------------- spectral machinery


def nyquist_safe_phase(freq: np.ndarray, shift, n: int) -> np.ndarray:
    """Fourier multiplier exp(-i*freq*shift) with the Nyquist entry replaced by
    cos(freq*shift) so real data stay real.

    ``shift`` may be an array; the result then broadcasts as shift[..., None] * freq.
    """
    shift = np.asarray(shift, dtype=float)
    arg = shift[..., None] * freq
    mult = np.exp(-1j * arg)
    if n % 2 == 0:
        mult[..., n // 2] = np.cos(arg[..., n // 2])
    return mult


def shift_periodic(values: np.ndarray, shift, spacing: float, axis: int = -1) -> np.ndarray:
    """Band-limited periodic translation v(s - shift) along ``axis``.

    A scalar shift translates every line; an array of shifts must broadcast
    against the remaining axes (one shift per line).
    """
    v = np.moveaxis(np.asarray(values), axis, -1)
    n = v.shape[-1]
    freq = 2 * np.pi * sfft.fftfreq(n, spacing)
    mult = nyquist_safe_phase(freq, shift, n)
    out = ifft(fft(v) * mult)
    if np.isrealobj(values):
        out = out.real
    return np.moveaxis(out, -1, axis)


def spectral_derivative(values: np.ndarray, spacing: float, axis: int = -1) -> np.ndarray:
    v = np.moveaxis(np.asarray(values), axis, -1)
    n = v.shape[-1]
    freq = 2 * np.pi * sfft.fftfreq(n, spacing)
    mult = 1j * freq
    if n % 2 == 0:
        mult[n // 2] = 0.0
    out = ifft(fft(v) * mult)
    if np.isrealobj(values):
        out = out.real
    return np.moveaxis(out, -1, axis)


def to_dual_k(values: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """F(x, y_j) = sum_m f(x, k_m) exp(-i y_j k_m) dk."""
    return grid.dk * np.exp(-1j * grid.y * grid.k_min) * fft(values, axis=-1)


def from_dual_k(F: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Inverse of to_dual_k: f(x, k_m) = (1/2pi) sum_j F(x, y_j) exp(i y_j k_m) dy."""
    return ifft(F * np.exp(1j * grid.y * grid.k_min), axis=-1) / grid.dk


def spectral_shift_k(f: PhaseField, shift: float) -> PhaseField:
    """f(x, k - shift), periodic in k, by a phase on the k-spectrum."""
    g = f.grid
    out = shift_periodic(f.values, shift, g.dk, axis=-1)
    return PhaseField(g, out, f.hermitian_real and np.isrealobj(out))


def trapezoid_weights(n_steps: int, dt: float) -> np.ndarray:
    w = np.full(n_steps + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def step_count(t_final: float, dt: float) -> int:
    if not dt > 0 or not t_final > 0:
        raise ConfigurationError("dt and T must be positive")
    n = round(t_final / dt)
    if n < 1 or abs(n * dt - t_final) > 1e-9 * t_final:
        raise ConfigurationError(f"T={t_final} is not an integer multiple of dt={dt}")
    return int(n)
