"""Wigner transform, collision operator and the Wigner-equation solver.

The equation  d_t f + k d_x f = L_V[f]  is advanced with SSP-RK3.  Transport
uses WENO5 with Lax-Friedrichs splitting (upwind for the constant speed of
each k-row); the nonlocal collision term is applied in the dual variable y of
k, where it is the pointwise multiplier  i * delta_eps[V](x, y).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (ComplexField, PhaseField, PhaseGrid, check_decay, delta_eps_potential,
                   fft, from_dual_k, ifft, require_same_grid, shift_periodic, step_count)
from .errors import ConfigurationError, NumericalBlowupError

CFL_SAFETY = 0.9
BLOWUP_FACTOR = 1e3
WENO_EPS = 1e-6
#: SSP-RK3 reaches the imaginary axis up to sqrt(3)
RK3_IMAG_LIMIT = math.sqrt(3.0)

_LINEAR_WEIGHTS = (0.1, 0.6, 0.3)


# ---------------------------------------------------------------- Wigner transform


def _shifted_masked(values: np.ndarray, grid: PhaseGrid, shifts: np.ndarray) -> np.ndarray:
    """Rows ``v(x - s_j)`` by trigonometric interpolation, zeroed where x - s_j
    leaves the box instead of wrapping around."""
    out = shift_periodic(np.broadcast_to(values, (len(shifts), grid.n_x)), shifts, grid.dx)
    src = grid.x[None, :] - shifts[:, None]
    out[(src < grid.x_min - 1e-12) | (src > grid.x_max - grid.dx + 1e-12)] = 0.0
    return out


def _correlation(phi1, phi2, grid: PhaseGrid, eps: float, y: np.ndarray) -> np.ndarray:
    s = 0.5 * eps * y
    a = _shifted_masked(phi1, grid, s)
    b = _shifted_masked(phi2, grid, -s)
    return a * np.conj(b)


def wigner_transform(phi1: ComplexField, phi2: ComplexField, eps: float,
                     grid: PhaseGrid = None) -> PhaseField:
    """W[phi1, phi2](x, k) = (2 pi)^-1 int e^{iky} phi1(x - eps y/2) conj(phi2)(x + eps y/2) dy.

    The y-integral runs over the dual lattice of the k-grid, so the result is
    exact up to aliasing in k and the interpolation of the half-shifts.
    """
    grid = phi1.grid if grid is None else grid
    require_same_grid(phi1.grid, grid, x_only=True)
    require_same_grid(phi2.grid, grid, x_only=True)
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    y = grid.y
    F = _correlation(phi1.values, phi2.values, grid, eps, y)  # (n_k, n_x)
    ny = grid.n_k // 2
    # the Nyquist column has no mirror partner: symmetrize it
    F[ny] = 0.5 * (F[ny] + _correlation(phi1.values, phi2.values, grid, eps, -y[ny:ny + 1])[0])
    W = from_dual_k(F.T, grid)
    same = phi1 is phi2 or np.array_equal(phi1.values, phi2.values)
    if same:
        W = W.real
    return PhaseField(grid, W, hermitian_real=same)


def moments(f: PhaseField) -> tuple[np.ndarray, np.ndarray]:
    """Density and current, the zeroth and first k-moments."""
    g = f.grid
    rho = np.sum(f.values, axis=1) * g.dk
    J = np.sum(f.values * g.k[None, :], axis=1) * g.dk
    return rho, J


# ---------------------------------------------------------------- collision operator


class CollisionOperator:
    """L_V^eps as the multiplier i*delta_eps[V](x, y) on the k-spectrum."""

    def __init__(self, grid: PhaseGrid, potential, eps: float):
        if not eps > 0:
            raise ConfigurationError("eps must be positive")
        self.grid = grid
        self.eps = eps
        y = grid.y
        d = delta_eps_potential(potential, grid.x[:, None], y[None, :], eps)
        d[:, grid.n_k // 2] = 0.0
        self.multiplier = 1j * d

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.multiplier)))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        # exp(-i y k_min) phases of to_dual_k/from_dual_k cancel for a pointwise multiplier
        out = ifft(self.multiplier * fft(values, axis=-1), axis=-1)
        return out.real if np.isrealobj(values) else out


def apply_collision(potential, f: PhaseField, eps: float) -> PhaseField:
    op = CollisionOperator(f.grid, potential, eps)
    out = op(f.values)
    return PhaseField(f.grid, out, hermitian_real=np.isrealobj(out))


def apply_d_eps(f: PhaseField, p: float, eps: float) -> PhaseField:
    """(f(x, k + eps p/2) - f(x, k - eps p/2)) / eps."""
    g = f.grid
    h = 0.5 * eps * p
    plus = shift_periodic(f.values, -h, g.dk, axis=-1)
    minus = shift_periodic(f.values, h, g.dk, axis=-1)
    out = (plus - minus) / eps
    return PhaseField(g, out, hermitian_real=np.isrealobj(out))


# ---------------------------------------------------------------- WENO5 transport


def _abs2(a):
    return a * a if np.isrealobj(a) else (a * np.conj(a)).real


def _weno_left(v: np.ndarray, eps_w: float) -> np.ndarray:
    """Reconstruction at x_{i+1/2} from the upwind-left stencil i-2..i+2 (axis 0)."""
    vm2 = np.roll(v, 2, axis=0)
    vm1 = np.roll(v, 1, axis=0)
    vp1 = np.roll(v, -1, axis=0)
    vp2 = np.roll(v, -2, axis=0)
    q0 = (2 * vm2 - 7 * vm1 + 11 * v) / 6
    q1 = (-vm1 + 5 * v + 2 * vp1) / 6
    q2 = (2 * v + 5 * vp1 - vp2) / 6
    b0 = 13 / 12 * _abs2(vm2 - 2 * vm1 + v) + 0.25 * _abs2(vm2 - 4 * vm1 + 3 * v)
    b1 = 13 / 12 * _abs2(vm1 - 2 * v + vp1) + 0.25 * _abs2(vm1 - vp1)
    b2 = 13 / 12 * _abs2(v - 2 * vp1 + vp2) + 0.25 * _abs2(3 * v - 4 * vp1 + vp2)
    # d_r / (beta_r + eps)^2 rescaled by eps^2 so nothing overflows
    a0 = _LINEAR_WEIGHTS[0] * (eps_w / (b0 + eps_w)) ** 2
    a1 = _LINEAR_WEIGHTS[1] * (eps_w / (b1 + eps_w)) ** 2
    a2 = _LINEAR_WEIGHTS[2] * (eps_w / (b2 + eps_w)) ** 2
    return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)


def _weno_eps(v: np.ndarray) -> float:
    # regularization relative to the field scale keeps the scheme homogeneous of degree one
    return WENO_EPS * float(np.max(_abs2(v)))


def weno5_flux(values: np.ndarray, speed: np.ndarray) -> np.ndarray:
    """Numerical flux F_{i+1/2} of  d_t u + d_x (c u) = 0,  c constant per k-column."""
    c_plus = np.maximum(speed, 0.0)[None, :]
    c_minus = np.minimum(speed, 0.0)[None, :]
    flux = np.zeros_like(values)
    fp = c_plus * values
    e = _weno_eps(fp)
    if e > 0:
        flux = flux + _weno_left(fp, e)
    fm = c_minus * values
    e = _weno_eps(fm)
    if e > 0:
        # mirror the right-biased stencil onto the left one
        mirrored = _weno_left(fm[::-1], e)[::-1]
        flux = flux + np.roll(mirrored, -1, axis=0)
    return flux


def transport_rhs(values: np.ndarray, grid: PhaseGrid, speed: np.ndarray) -> np.ndarray:
    flux = weno5_flux(values, speed)
    return -(flux - np.roll(flux, 1, axis=0)) / grid.dx


# ---------------------------------------------------------------- time stepping


class WignerStepper:
    """SSP-RK3 step for  d_t f = sign * (-k d_x f + L_V f); sign = -1 runs time backward."""

    def __init__(self, grid: PhaseGrid, potential, eps: float, dt: float, sign: int = 1):
        self.grid = grid
        self.dt = dt
        self.sign = sign
        self.collision = CollisionOperator(grid, potential, eps)
        self.speed = sign * grid.k
        cfl = dt * np.max(np.abs(grid.k)) / grid.dx
        stiff = dt * self.collision.spectral_radius
        if cfl > CFL_SAFETY:
            raise ConfigurationError(f"CFL number {cfl:.3f} exceeds {CFL_SAFETY}")
        if stiff > RK3_IMAG_LIMIT:
            raise ConfigurationError(
                f"dt * max|delta_eps V| = {stiff:.3f} exceeds the RK3 limit {RK3_IMAG_LIMIT:.3f}")
        self.cfl = cfl
        self.stiffness = stiff

    def rhs(self, u: np.ndarray) -> np.ndarray:
        return transport_rhs(u, self.grid, self.speed) + self.sign * self.collision(u)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        dt = self.dt
        u1 = u + dt * self.rhs(u)
        u2 = 0.75 * u + 0.25 * (u1 + dt * self.rhs(u1))
        return u / 3 + 2 / 3 * (u2 + dt * self.rhs(u2))


def step_wigner(f: PhaseField, potential, eps: float, dt: float) -> PhaseField:
    out = WignerStepper(f.grid, potential, eps, dt)(f.values)
    return PhaseField(f.grid, out, hermitian_real=np.isrealobj(out))


@dataclass
class WignerRun:
    grid: PhaseGrid
    eps: float
    potential: object
    dt: float
    t_final: float
    snapshots: np.ndarray  # (n_steps + 1, n_x, n_k) in increasing time
    direction: str
    cfl: float = 0.0
    stiffness: float = 0.0

    @property
    def n_steps(self) -> int:
        return self.snapshots.shape[0] - 1

    def at(self, n: int) -> PhaseField:
        v = self.snapshots[n]
        return PhaseField(self.grid, v, hermitian_real=np.isrealobj(v))

    def masses(self) -> np.ndarray:
        return np.sum(self.snapshots, axis=(1, 2)) * self.grid.dx * self.grid.dk


def solve_wigner(data: PhaseField, potential, eps: float, dt: float, t_final: float,
                 direction: str = "forward") -> WignerRun:
    """Forward from f(0) = data, or backward from g(T) = data (the adjoint problem)."""
    if direction not in ("forward", "backward"):
        raise ConfigurationError(f"unknown direction {direction!r}")
    n = step_count(t_final, dt)
    grid = data.grid
    check_decay(data.values, "Wigner data")
    sign = 1 if direction == "forward" else -1
    stepper = WignerStepper(grid, potential, eps, dt, sign)
    out = np.empty((n + 1,) + grid.shape, dtype=data.values.dtype)
    limit = BLOWUP_FACTOR * max(float(np.max(np.abs(data.values))), 1e-300)
    u = data.values.copy()
    order = range(n + 1) if sign > 0 else range(n, -1, -1)
    for count, i in enumerate(order):
        if count:
            u = stepper(u)
            peak = float(np.max(np.abs(u)))
            if not np.isfinite(peak) or peak > limit:
                raise NumericalBlowupError(
                    f"Wigner solution grew to {peak:.3e} at step {count} (eps={eps}, dt={dt})")
        out[i] = u
    return WignerRun(grid, eps, potential, dt, n * dt, out, direction, stepper.cfl,
                     stepper.stiffness)


def solve_wigner_perturbed(background: WignerRun, vtilde, eps: float = None) -> PhaseField:
    """f~(T) for  d_t f~ + k d_x f~ = L_Vb[f~] + L_V~[f_b],  f~(0) = 0.

    The background is re-staged alongside the perturbation so the source sees
    the same RK3 stage values that produced the stored background snapshots.
    """
    if background.direction != "forward":
        raise ConfigurationError("the perturbed solve needs a forward background run")
    eps = background.eps if eps is None else eps
    if eps != background.eps:
        raise ConfigurationError("eps differs from the background run")
    grid, dt = background.grid, background.dt
    stepper = WignerStepper(grid, background.potential, eps, dt)
    source = CollisionOperator(grid, vtilde, eps)
    u = np.zeros(grid.shape, dtype=np.result_type(background.snapshots.dtype, float))
    for n in range(background.n_steps):
        b = background.snapshots[n]
        b1 = b + dt * stepper.rhs(b)
        b2 = 0.75 * b + 0.25 * (b1 + dt * stepper.rhs(b1))
        u1 = u + dt * (stepper.rhs(u) + source(b))
        u2 = 0.75 * u + 0.25 * (u1 + dt * (stepper.rhs(u1) + source(b1)))
        u = u / 3 + 2 / 3 * (u2 + dt * (stepper.rhs(u2) + source(b2)))
        if not np.all(np.isfinite(u)):
            raise NumericalBlowupError(f"perturbed Wigner solve diverged at step {n + 1}")
    return PhaseField(grid, u, hermitian_real=np.isrealobj(u))


def fredholm_lhs_phase(f_tilde_T: PhaseField, g_T: PhaseField) -> complex:
    """integral of f~_T * conj(g_T) over phase space."""
    return f_tilde_T.inner(g_T)
