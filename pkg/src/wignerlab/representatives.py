"""Fredholm kernels of the three linearized problems.

Each kernel R turns a potential perturbation V~ into the measured pairing
int V~(x) R(x) dx.  All time integrals use the trapezoid rule on the stored
solver snapshots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (ComplexField, GaussianSpec, PhaseGrid, fft, gaussian_phase_field, ifft,
                   l2_inner_product, require_same_grid, spectral_derivative, trapezoid_weights)
from .errors import ConfigurationError, GridMismatchError, IndeterminateResidualError, OracleCapError
from .liouville import LiouvilleRun, solve_liouville
from .schrodinger import SchrodingerRun, solve_schrodinger
from .wigner import WignerRun, apply_d_eps, solve_wigner, wigner_transform

ORACLE_CAP = 128 * 128


@dataclass
class Representative:
    grid: PhaseGrid
    values: np.ndarray
    kind: str
    eps: Optional[float] = None
    provenance: dict = field(default_factory=dict)

    def pair(self, vtilde) -> complex:
        """int V~(x) R(x) dx on the grid."""
        v = vtilde if isinstance(vtilde, np.ndarray) else vtilde.value(self.grid.x)
        return complex(np.sum(v * self.values) * self.grid.dx)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dx))

    def total(self) -> complex:
        return complex(np.sum(self.values) * self.grid.dx)


def _check_pair(a, b, need_eps: bool):
    require_same_grid(a.grid, b.grid)
    if abs(a.dt - b.dt) > 1e-15 or a.n_steps != b.n_steps:
        raise GridMismatchError("background and adjoint runs use different time lattices")
    if a.direction != "forward" or b.direction != "backward":
        raise ConfigurationError("expected a forward background run and a backward adjoint run")
    if need_eps and a.eps != b.eps:
        raise ConfigurationError(f"eps mismatch: {a.eps} vs {b.eps}")


def _maybe_real(values: np.ndarray, *runs) -> np.ndarray:
    if all(np.isrealobj(r.snapshots) for r in runs):
        return values.real
    return values


# ---------------------------------------------------------------- Schrodinger


def rep_schrodinger(background: SchrodingerRun, adjoint: SchrodingerRun,
                    eps: float = None) -> Representative:
    """R_S(x) = 1/(i eps) int_0^T phi_b conj(psi) dt."""
    _check_pair(background, adjoint, need_eps=True)
    eps = background.eps if eps is None else eps
    w = trapezoid_weights(background.n_steps, background.dt)
    acc = np.einsum("t,tx->x", w, background.snapshots * np.conj(adjoint.snapshots))
    return Representative(background.grid, acc / (1j * eps), "schrodinger", eps)


# ---------------------------------------------------------------- Wigner


def _time_averaged_pairing(background: WignerRun, adjoint: WignerRun) -> np.ndarray:
    """sum_t w_t conj(G) F on the (x, y) lattice; the exp(-i y k_min) phases cancel."""
    grid = background.grid
    w = trapezoid_weights(background.n_steps, background.dt)
    P = np.zeros(grid.shape, dtype=complex)
    for n in range(background.n_steps + 1):
        F = fft(background.snapshots[n], axis=-1)
        G = fft(adjoint.snapshots[n], axis=-1)
        P += w[n] * np.conj(G) * F
    return P * grid.dk ** 2


def rep_wigner(background: WignerRun, adjoint: WignerRun, eps: float = None) -> Representative:
    """R_W(x) = (i/2pi) int e^{ip(z-x)} conj(g)(z,k) D_eps f_b(z,k,p) dp dz dk dt.

    By Parseval in k and Fourier inversion in p this collapses to
    R_W(x) = (i / (2 pi eps)) int [P(x - eps y/2, y) - P(x + eps y/2, y)] dy dt
    with P = conj(G) F the product of the k-spectra.  The two half-shifts
    combine into the multiplier -2i sin(xi * eps y / 2) on the x-spectrum.
    """
    _check_pair(background, adjoint, need_eps=True)
    eps = background.eps if eps is None else eps
    grid = background.grid
    P = _time_averaged_pairing(background, adjoint)
    s = 0.5 * eps * grid.y
    mult = np.sin(np.outer(grid.xi, s))
    mult[grid.n_x // 2, :] = 0.0
    mult[:, grid.n_k // 2] = 0.0
    Phat = fft(P, axis=0)
    R = ifft(np.sum(mult * Phat, axis=1)) * grid.dy / (math.pi * eps)
    return Representative(grid, _maybe_real(R, background, adjoint), "wigner", eps)


def rep_wigner_oracle(background: WignerRun, adjoint: WignerRun, eps: float = None,
                      cap: int = ORACLE_CAP) -> Representative:
    """Brute-force quadrature of the defining integral on the discrete (t, p, z, k) lattice.

    The p-lattice is the symmetric dual of the periodic x-grid with half
    weights on the two Nyquist ends; D_eps uses spectral k-shifts.
    """
    _check_pair(background, adjoint, need_eps=True)
    eps = background.eps if eps is None else eps
    grid = background.grid
    if grid.n_x * grid.n_k > cap:
        raise OracleCapError(f"grid {grid.n_x}x{grid.n_k} exceeds the oracle cap of {cap} nodes")
    dp = 2 * math.pi / grid.length_x
    half = grid.n_x // 2
    p_values = dp * np.arange(-half, half + 1)
    p_weights = np.full(len(p_values), dp)
    p_weights[0] = p_weights[-1] = 0.5 * dp
    w_t = trapezoid_weights(background.n_steps, background.dt)
    z_minus_x = np.subtract.outer(grid.x, grid.x)
    R = np.zeros(grid.n_x, dtype=complex)
    for n in range(background.n_steps + 1):
        fb = background.at(n)
        gbar = np.conj(adjoint.snapshots[n])
        for p, wp in zip(p_values, p_weights):
            Df = apply_d_eps(fb, p, eps).values
            inner_k = np.sum(gbar * Df, axis=1) * grid.dk  # function of z
            R += w_t[n] * wp * (inner_k * grid.dx) @ np.exp(1j * p * z_minus_x)
    R *= 1j / (2 * math.pi)
    return Representative(grid, _maybe_real(R, background, adjoint), "wigner", eps,
                          {"method": "oracle"})


# ---------------------------------------------------------------- Liouville


def rep_liouville(background: LiouvilleRun, adjoint: LiouvilleRun) -> Representative:
    """R_L(x) = -d/dx int_0^T int conj(g) d_k f_b dk dt, spectral derivatives."""
    _check_pair(background, adjoint, need_eps=False)
    grid = background.grid
    w = trapezoid_weights(background.n_steps, background.dt)
    Q = np.zeros(grid.n_x, dtype=complex)
    for n in range(background.n_steps + 1):
        dkf = spectral_derivative(background.snapshots[n], grid.dk, axis=-1)
        Q += w[n] * np.sum(np.conj(adjoint.snapshots[n]) * dkf, axis=1) * grid.dk
    Q = _maybe_real(Q, background, adjoint)
    R = -spectral_derivative(Q, grid.dx)
    return Representative(grid, R, "liouville")


# ---------------------------------------------------------------- Gaussian-data experiments


@dataclass(frozen=True)
class KernelSetup:
    """Everything needed to turn a pair of data centers into a kernel."""

    grid: PhaseGrid
    potential: object
    f_data: GaussianSpec
    g_data: GaussianSpec
    dt: float
    t_final: float

    def f_at(self, center_x: float) -> GaussianSpec:
        d = self.f_data
        return GaussianSpec(d.amplitude, center_x, d.width_x, d.center_k, d.width_k)

    def g_at(self, center_x: float) -> GaussianSpec:
        d = self.g_data
        return GaussianSpec(d.amplitude, center_x, d.width_x, d.center_k, d.width_k)


def wigner_background(setup: KernelSetup, eps: float, center_x: float) -> WignerRun:
    f0 = gaussian_phase_field(setup.f_at(center_x), setup.grid)
    return solve_wigner(f0, setup.potential, eps, setup.dt, setup.t_final, "forward")


def wigner_adjoint(setup: KernelSetup, eps: float, center_x: float) -> WignerRun:
    gT = gaussian_phase_field(setup.g_at(center_x), setup.grid)
    return solve_wigner(gT, setup.potential, eps, setup.dt, setup.t_final, "backward")


def liouville_background(setup: KernelSetup, center_x: float) -> LiouvilleRun:
    return solve_liouville(setup.f_at(center_x), setup.potential, setup.dt, setup.t_final,
                           "forward", grid=setup.grid)


def liouville_adjoint(setup: KernelSetup, center_x: float) -> LiouvilleRun:
    return solve_liouville(setup.g_at(center_x), setup.potential, setup.dt, setup.t_final,
                           "backward", grid=setup.grid)


def wigner_kernel(setup: KernelSetup, eps: float, b_x: float, c_x: float) -> Representative:
    R = rep_wigner(wigner_background(setup, eps, b_x), wigner_adjoint(setup, eps, c_x))
    R.provenance.update(b_x=b_x, c_x=c_x)
    return R


def liouville_kernel(setup: KernelSetup, b_x: float, c_x: float) -> Representative:
    R = rep_liouville(liouville_background(setup, b_x), liouville_adjoint(setup, c_x))
    R.provenance.update(b_x=b_x, c_x=c_x)
    return R


def relative_l2_error(approx: Representative, limit: Representative) -> float:
    """||R^eps - R|| / ||R|| on the x-grid."""
    require_same_grid(approx.grid, limit.grid, x_only=True)
    num = np.linalg.norm(approx.values - limit.values)
    den = np.linalg.norm(limit.values)
    return float(num / den)


# ---------------------------------------------------------------- Schrodinger <-> Wigner identity


@dataclass
class IdentityTerms:
    lhs: np.ndarray  # (2 pi eps) R_W[f_I, g_T]
    rhs: np.ndarray
    grid: PhaseGrid

    @property
    def residual(self) -> float:
        den = np.linalg.norm(self.rhs)
        if den * math.sqrt(self.grid.dx) < 1e-14:
            if np.linalg.norm(self.lhs) * math.sqrt(self.grid.dx) < 1e-14:
                return 0.0
            raise IndeterminateResidualError("right-hand side vanishes; residual undefined")
        return float(np.linalg.norm(self.lhs - self.rhs) / den)


def wigner_schrodinger_identity(phi_I: ComplexField, phi_I2: ComplexField, psi_T: ComplexField,
                                psi_T2: ComplexField, potential, eps: float, dt: float,
                                t_final: float, grid: PhaseGrid = None) -> IdentityTerms:
    """Both sides of  (2 pi eps) R_W[f_I, g_T] = <phi_I', psi'(0)> R_S[phi_I, psi_T]
    - <phi_I, psi(0)> R_S[phi_I', psi_T']  with f_I = W[phi_I, psi'(0)] and
    g_T = W[psi_T, phi_b'(T)].  Primed data carry the suffix 2."""
    grid = phi_I.grid if grid is None else grid
    phi_b = solve_schrodinger(phi_I, potential, eps, dt, t_final, "forward")
    phi_b2 = solve_schrodinger(phi_I2, potential, eps, dt, t_final, "forward")
    psi = solve_schrodinger(psi_T, potential, eps, dt, t_final, "backward")
    psi2 = solve_schrodinger(psi_T2, potential, eps, dt, t_final, "backward")
    rhs = (l2_inner_product(phi_I2, psi2.at(0)) * rep_schrodinger(phi_b, psi).values
           - l2_inner_product(phi_I, psi.at(0)) * rep_schrodinger(phi_b2, psi2).values)
    n = phi_b.n_steps
    f_I = wigner_transform(phi_I, psi2.at(0), eps, grid)
    g_T = wigner_transform(psi_T, phi_b2.at(n), eps, grid)
    f_b = solve_wigner(f_I, potential, eps, dt, t_final, "forward")
    g = solve_wigner(g_T, potential, eps, dt, t_final, "backward")
    lhs = 2 * math.pi * eps * rep_wigner(f_b, g).values
    return IdentityTerms(lhs, rhs, grid)


def check_wigner_schrodinger_identity(phi_I, phi_I2, psi_T, psi_T2, potential, eps, dt,
                                      t_final, grid=None) -> float:
    """Relative L2 residual of the Wigner/Schrodinger kernel identity."""
    if not np.any(psi_T.values) and not np.any(psi_T2.values):
        return 0.0
    return wigner_schrodinger_identity(phi_I, phi_I2, psi_T, psi_T2, potential, eps, dt,
                                       t_final, grid).residual
