"""Split-step spectral solver for  i eps d_t phi = -(eps^2/2) phi'' + V phi  on a periodic x-grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (ComplexField, PhaseGrid, check_decay, fft, ifft, require_same_grid,
                   step_count)
from .errors import ConfigurationError


def _sample(potential, grid: PhaseGrid) -> np.ndarray:
    if isinstance(potential, np.ndarray):
        if potential.shape != (grid.n_x,):
            raise ConfigurationError("tabulated potential does not match the x-grid")
        return potential.astype(float)
    return np.asarray(potential.value(grid.x), dtype=float)


class StrangPropagator:
    """Precomputed Strang step V/2 - kinetic - V/2 for fixed (V, eps, dt)."""

    def __init__(self, grid: PhaseGrid, potential, eps: float, dt: float):
        if not eps > 0:
            raise ConfigurationError("eps must be positive")
        self.grid = grid
        v = _sample(potential, grid)
        self.half_potential = np.exp(-0.5j * v * dt / eps)
        self.kinetic = np.exp(-0.5j * eps * grid.xi ** 2 * dt)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        u = self.half_potential * values
        u = ifft(self.kinetic * fft(u))
        return self.half_potential * u


def step_strang(phi: ComplexField, potential, eps: float, dt: float) -> ComplexField:
    return ComplexField(phi.grid, StrangPropagator(phi.grid, potential, eps, dt)(phi.values))


@dataclass
class SchrodingerRun:
    grid: PhaseGrid
    eps: float
    potential: object
    dt: float
    t_final: float
    snapshots: np.ndarray  # (n_steps + 1, n_x); row n is the state at t = n*dt
    direction: str

    @property
    def n_steps(self) -> int:
        return self.snapshots.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def at(self, n: int) -> ComplexField:
        return ComplexField(self.grid, self.snapshots[n])

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.snapshots) ** 2, axis=1) * self.grid.dx)


def solve_schrodinger(data: ComplexField, potential, eps: float, dt: float, t_final: float,
                      direction: str = "forward") -> SchrodingerRun:
    """Forward: data is phi(0).  Backward: data is psi(T), evolved back to t = 0.

    Snapshots are always stored in increasing time.
    """
    if direction not in ("forward", "backward"):
        raise ConfigurationError(f"unknown direction {direction!r}")
    n = step_count(t_final, dt)
    check_decay(data.values, "Schrodinger data")
    sign = 1.0 if direction == "forward" else -1.0
    prop = StrangPropagator(data.grid, potential, eps, sign * dt)
    out = np.empty((n + 1, data.grid.n_x), dtype=complex)
    u = data.values.copy()
    idx = range(n + 1) if direction == "forward" else range(n, -1, -1)
    for count, i in enumerate(idx):
        if count:
            u = prop(u)
        out[i] = u
    return SchrodingerRun(data.grid, eps, potential, dt, n * dt, out, direction)


def solve_schrodinger_perturbed(background: SchrodingerRun, vtilde, eps: float = None
                                ) -> ComplexField:
    """phi~(T) for  i eps d_t phi~ = H_b phi~ + V~ phi_b,  phi~(0) = 0.

    Each step propagates the state and injects the source at the step
    midpoint: S(dt) u + (dt / (i eps)) S(dt/2) [V~ S(dt/2) phi_b(t_n)].
    """
    if background.direction != "forward":
        raise ConfigurationError("the perturbed solve needs a forward background run")
    eps = background.eps if eps is None else eps
    if eps != background.eps:
        raise ConfigurationError("eps differs from the background run")
    grid, dt = background.grid, background.dt
    vt = _sample(vtilde, grid)
    full = StrangPropagator(grid, background.potential, eps, dt)
    half = StrangPropagator(grid, background.potential, eps, 0.5 * dt)
    coef = dt / (1j * eps)
    u = np.zeros(grid.n_x, dtype=complex)
    for n in range(background.n_steps):
        u = full(u) + coef * half(vt * half(background.snapshots[n]))
    return ComplexField(grid, u)


def fredholm_lhs_schrodinger(phi_tilde_T: ComplexField, psi_T: ComplexField) -> complex:
    """Measured side of the linearized problem: integral of phi~_T * conj(psi_T)."""
    require_same_grid(phi_tilde_T.grid, psi_T.grid, x_only=True)
    return complex(np.sum(phi_tilde_T.values * np.conj(psi_T.values)) * psi_T.grid.dx)
