"""Classical limit solved along characteristics  x' = k,  k' = -V'(x).

Grid snapshots are produced by tracing every node back (forward problem) or
forward (adjoint problem) to the time where the data lives.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import (GaussianSpec, PhaseField, PhaseGrid, check_decay, spectral_derivative,
                   step_count, trapezoid_weights)
from .errors import ConfigurationError


@dataclass(frozen=True)
class FlowState:
    x: np.ndarray | float
    k: np.ndarray | float


def _rk4(x, k, potential, h):
    def acc(z):
        return -potential.grad(z)

    k1x, k1k = k, acc(x)
    k2x, k2k = k + 0.5 * h * k1k, acc(x + 0.5 * h * k1x)
    k3x, k3k = k + 0.5 * h * k2k, acc(x + 0.5 * h * k2x)
    k4x, k4k = k + h * k3k, acc(x + h * k3x)
    x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    k = k + h / 6 * (k1k + 2 * k2k + 2 * k3k + k4k)
    return x, k


def hamilton_flow(start: FlowState, potential, t_span: float, dt: float) -> FlowState:
    """RK4 flow of the Hamiltonian k^2/2 + V(x) over t_span (negative traces back)."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    n = max(1, int(round(abs(t_span) / dt)))
    h = t_span / n
    x = np.asarray(start.x, dtype=float)
    k = np.asarray(start.k, dtype=float)
    for _ in range(n):
        x, k = _rk4(x, k, potential, h)
    return FlowState(x, k)


def energy(state: FlowState, potential):
    return 0.5 * np.asarray(state.k) ** 2 + potential.value(state.x)


# ---------------------------------------------------------------- off-grid evaluation


def wrap_x(x, grid: PhaseGrid):
    return grid.x_min + np.mod(np.asarray(x) - grid.x_min, grid.length_x)


def _spline_eval(values: np.ndarray, grid: PhaseGrid, x, k) -> np.ndarray:
    """Periodic cubic-spline interpolation of grid samples at (x, k)."""
    ix = (np.asarray(x) - grid.x_min) / grid.dx
    ik = (np.asarray(k) - grid.k_min) / grid.dk
    coords = np.array([ix.ravel(), ik.ravel()])

    def interp(a):
        return ndimage.map_coordinates(a, coords, order=3, mode="grid-wrap").reshape(ix.shape)

    if np.iscomplexobj(values):
        return interp(values.real) + 1j * interp(values.imag)
    return interp(values)


def evaluate_data(data, grid: PhaseGrid, x, k) -> np.ndarray:
    """Data at arbitrary points: exact for a Gaussian spec, spline for sampled fields.
    x is wrapped into the periodic box."""
    xw = wrap_x(x, grid)
    if isinstance(data, GaussianSpec):
        return data.phase_value(xw, k)
    if isinstance(data, PhaseField):
        return _spline_eval(data.values, grid, xw, k)
    raise ConfigurationError(f"cannot evaluate data of type {type(data).__name__}")


# ---------------------------------------------------------------- runs


@dataclass
class LiouvilleRun:
    grid: PhaseGrid
    potential: object
    dt: float
    t_final: float
    snapshots: np.ndarray  # (n_steps + 1, n_x, n_k), increasing time
    direction: str
    flags: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return self.snapshots.shape[0] - 1

    def at(self, n: int) -> PhaseField:
        v = self.snapshots[n]
        return PhaseField(self.grid, v, hermitian_real=np.isrealobj(v))


def _outside(x, grid: PhaseGrid) -> int:
    return int(np.count_nonzero((x < grid.x_min) | (x >= grid.x_max)))


def solve_liouville(data, potential, dt: float, t_final: float, direction: str = "forward",
                    grid: PhaseGrid = None) -> LiouvilleRun:
    """Values are constant along characteristics.

    ``data`` is f(0) (forward) or g(T) (backward), as a PhaseField or a
    phase-space GaussianSpec (then ``grid`` is required).
    """
    if direction not in ("forward", "backward"):
        raise ConfigurationError(f"unknown direction {direction!r}")
    if isinstance(data, PhaseField):
        grid = data.grid
        check_decay(data.values, "Liouville data")
        dtype = data.values.dtype
    elif isinstance(data, GaussianSpec):
        if grid is None:
            raise ConfigurationError("a grid is required with Gaussian data")
        dtype = float
    else:
        raise ConfigurationError(f"unsupported data type {type(data).__name__}")
    n = step_count(t_final, dt)
    X, K = grid.mesh()
    out = np.empty((n + 1,) + grid.shape, dtype=dtype)
    exits = 0
    for i in range(n + 1):
        # forward problem: data sits at t = 0, trace back over t_i; adjoint: forward over T - t_i
        span = -i * dt if direction == "forward" else (n - i) * dt
        if span == 0:
            foot = FlowState(X, K)
        else:
            foot = hamilton_flow(FlowState(X, K), potential, span, dt)
        exits += _outside(foot.x, grid)
        out[i] = evaluate_data(data, grid, foot.x, foot.k)
    flags = {"characteristics_outside_box": exits}
    return LiouvilleRun(grid, potential, dt, n * dt, out, direction, flags)


def solve_liouville_perturbed(background: LiouvilleRun, vtilde, dt: float = None) -> PhaseField:
    """f~(T) by Duhamel along characteristics.

    f~(T, x, k) = int_0^T  V~'(X(s)) * d_k f_b(s, X(s), K(s)) ds  where (X, K)
    is the background characteristic ending at (x, k) at time T.  The time
    integral uses the trapezoid on the stored snapshot times.
    """
    if background.direction != "forward":
        raise ConfigurationError("the perturbed solve needs a forward background run")
    if dt is not None and abs(dt - background.dt) > 1e-15:
        raise ConfigurationError("dt differs from the background run")
    grid, dt, n = background.grid, background.dt, background.n_steps
    w = trapezoid_weights(n, dt)
    X, K = grid.mesh()
    x, k = X.copy(), K.copy()
    total = np.zeros(grid.shape, dtype=np.result_type(background.snapshots.dtype, float))
    for i in range(n, -1, -1):
        if i < n:
            x, k = _rk4(x, k, background.potential, -dt)
        dkf = spectral_derivative(background.snapshots[i], grid.dk, axis=-1)
        if i == n:
            dkf_at = dkf
        else:
            dkf_at = _spline_eval(dkf, grid, wrap_x(x, grid), k)
        total = total + w[i] * vtilde.grad(x) * dkf_at
    return PhaseField(grid, total, hermitian_real=np.isrealobj(total))
