"""Kernel matrices over translated Gaussian data, their SVDs, convergence curves
and a Tikhonov inversion of the assembled Fredholm system."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import PhaseGrid
from .errors import ConfigurationError, DegenerateMatrixError, WignerLabError
from .representatives import (KernelSetup, Representative, liouville_adjoint,
                              liouville_background, rep_liouville, rep_wigner,
                              relative_l2_error, wigner_adjoint, wigner_background)

log = logging.getLogger(__name__)

#: numerical rank cutoff relative to the leading singular value
RANK_TOL = 1e-12


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass
class RepresentativeMatrix:
    """Kernels R_ij for data centered at (centers_i[i], centers_j[j]).

    ``entries`` has shape (N_i, N_j, n_x).
    """

    grid: PhaseGrid
    centers_i: np.ndarray
    centers_j: np.ndarray
    entries: np.ndarray
    kind: str
    eps: Optional[float] = None

    def __post_init__(self):
        shape = (len(self.centers_i), len(self.centers_j), self.grid.n_x)
        if self.entries.shape != shape:
            raise ConfigurationError(f"entries shape {self.entries.shape} != {shape}")

    def flattened(self, weighted: bool = True) -> np.ndarray:
        """(i, j) pairs as rows, x as columns; sqrt(dx) weights make the SVD an L2(x) one."""
        a = self.entries.reshape(-1, self.grid.n_x)
        return a * math.sqrt(self.grid.dx) if weighted else a

    def kernel(self, i: int, j: int) -> Representative:
        return Representative(self.grid, self.entries[i, j], self.kind, self.eps,
                              {"b_x": self.centers_i[i], "c_x": self.centers_j[j]})


class MatrixAssemblyError(WignerLabError):
    def __init__(self, i, j, cause):
        super().__init__(f"kernel ({i}, {j}) failed: {cause}")
        self.pair = (i, j)
        self.exit_code = getattr(cause, "exit_code", 1)


def assemble_rep_matrix(centers_i: Sequence[float], centers_j: Sequence[float],
                        setup: KernelSetup, kind: str, eps: float = None,
                        cache: bool = True) -> RepresentativeMatrix:
    """Build every kernel with N_i background solves and N_j adjoint solves."""
    if kind not in ("wigner", "liouville"):
        raise ConfigurationError(f"unknown kernel kind {kind!r}")
    if kind == "wigner" and eps is None:
        raise ConfigurationError("wigner kernels need eps")
    grid = setup.grid
    for c in list(centers_i) + list(centers_j):
        if not grid.x_min < c < grid.x_max:
            raise ConfigurationError(f"center {c} lies outside the x-domain")

    def background(c):
        return wigner_background(setup, eps, c) if kind == "wigner" else liouville_background(setup, c)

    def adjoint(c):
        return wigner_adjoint(setup, eps, c) if kind == "wigner" else liouville_adjoint(setup, c)

    def kernel(fb, g):
        return rep_wigner(fb, g).values if kind == "wigner" else rep_liouville(fb, g).values

    entries = np.empty((len(centers_i), len(centers_j), grid.n_x))
    if cache:
        fbs = [background(c) for c in centers_i]
        gs = [adjoint(c) for c in centers_j]
    for i, bx in enumerate(centers_i):
        for j, cx in enumerate(centers_j):
            try:
                fb = fbs[i] if cache else background(bx)
                g = gs[j] if cache else adjoint(cx)
                entries[i, j] = np.real(kernel(fb, g))
            except WignerLabError as exc:
                raise MatrixAssemblyError(i, j, exc) from exc
    return RepresentativeMatrix(grid, np.asarray(centers_i, float), np.asarray(centers_j, float),
                                entries, kind, eps)


def centers_on_interval(x_left: float, x_right: float, spacing: float) -> np.ndarray:
    n = int(math.floor((x_right - x_left) / spacing + 1e-9)) + 1
    return x_left + spacing * np.arange(n)


# ---------------------------------------------------------------- SVD diagnostics


def _as_matrix(m) -> np.ndarray:
    return m.flattened() if isinstance(m, RepresentativeMatrix) else np.asarray(m)


def relative_singular_values(m) -> np.ndarray:
    s = np.linalg.svd(_as_matrix(m), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        raise DegenerateMatrixError("all-zero kernel matrix")
    return s / s[0]


def singular_value_errors(sweep, limit, indices: Sequence[int] = (2, 3, 4, 5)) -> dict:
    """Err_{s,i}(eps) = |s_i^eps - s_i| / |s_i| with 1-based index i.

    ``sweep`` is a list of (eps, matrix) pairs; returns {i: array over the sweep}.
    Indices whose limit value vanishes are skipped with a warning.
    """
    s_lim = relative_singular_values(limit)
    out = {}
    for i in indices:
        if i - 1 >= len(s_lim) or s_lim[i - 1] == 0:
            warnings.warn(f"singular value {i} of the limit vanishes; index skipped")
            continue
        errs = []
        for _, m in sweep:
            s = relative_singular_values(m)
            if np.shape(_as_matrix(m)) != np.shape(_as_matrix(limit)):
                raise ConfigurationError("matrices in the sweep differ in shape from the limit")
            errs.append(abs(s[i - 1] - s_lim[i - 1]) / abs(s_lim[i - 1]))
        out[i] = np.array(errs)
    return out


def _profile_matrix(m) -> np.ndarray:
    """Kernels as columns so that left singular vectors are profiles over x."""
    return m.flattened().T if isinstance(m, RepresentativeMatrix) else np.asarray(m)


def leading_subspace(m, k: int) -> np.ndarray:
    u, s, _ = np.linalg.svd(_profile_matrix(m), full_matrices=False)
    if k < 1 or k > len(s) or s[k - 1] < RANK_TOL * s[0]:
        raise DegenerateMatrixError(f"k={k} exceeds the numerical rank")
    return u[:, :k]


def subspace_angle(limit, approx, k: int) -> float:
    """|| Q_k - Q_k^eps (Q_k^eps)^H Q_k ||_2 between leading left singular subspaces."""
    q = leading_subspace(limit, k)
    qe = leading_subspace(approx, k)
    return float(np.linalg.norm(q - qe @ (qe.conj().T @ q), 2))


# ---------------------------------------------------------------- convergence curves


@dataclass
class ConvergenceReport:
    eps_values: np.ndarray
    err_values: np.ndarray
    fitted_slope: float
    singular_value_errors: dict = field(default_factory=dict)
    subspace_angles: dict = field(default_factory=dict)

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.err_values) < 0))


def err_curve_and_slope(eps_values, errs) -> ConvergenceReport:
    """Least-squares slope of log2(err) against log2(eps)."""
    eps_values = np.asarray(eps_values, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if len(eps_values) < 3 or len(errs) != len(eps_values):
        raise ConfigurationError("need at least three (eps, err) points")
    if np.any(errs <= 0) or np.any(eps_values <= 0):
        raise ConfigurationError("errors and eps must be positive")
    order = np.argsort(eps_values)[::-1]
    eps_values, errs = eps_values[order], errs[order]
    slope = np.polyfit(np.log2(eps_values), np.log2(errs), 1)[0]
    return ConvergenceReport(eps_values, errs, float(slope))


def sweep_epsilon(setup: KernelSetup, eps_values, b_x: float, c_x: float):
    """Err_R over eps for one data pair; returns the report and every kernel."""
    fb = liouville_background(setup, b_x)
    g = liouville_adjoint(setup, c_x)
    limit = rep_liouville(fb, g)
    kernels = []
    errs = []
    for eps in eps_values:
        R = rep_wigner(wigner_background(setup, eps, b_x), wigner_adjoint(setup, eps, c_x))
        kernels.append(R)
        errs.append(relative_l2_error(R, limit))
        log.info("eps=%.6g  Err_R=%.6g", eps, errs[-1])
    return err_curve_and_slope(eps_values, errs), limit, kernels


def svd_study(setup: KernelSetup, centers: Sequence[float], eps_values,
              indices=(2, 3, 4, 5), ranks=(1, 3)):
    limit = assemble_rep_matrix(centers, centers, setup, "liouville")
    sweep = [(eps, assemble_rep_matrix(centers, centers, setup, "wigner", eps))
             for eps in eps_values]
    sv_errs = singular_value_errors(sweep, limit, indices)
    angles = {}
    for k in ranks:
        try:
            angles[k] = np.array([subspace_angle(limit, m, k) for _, m in sweep])
        except DegenerateMatrixError as exc:
            warnings.warn(f"subspace angle for k={k} skipped: {exc}")
    errs = [np.linalg.norm(m.entries - limit.entries) / np.linalg.norm(limit.entries)
            for _, m in sweep]
    report = err_curve_and_slope(eps_values, errs) if len(eps_values) >= 3 else \
        ConvergenceReport(np.asarray(eps_values, float), np.asarray(errs), float("nan"))
    report.singular_value_errors = sv_errs
    report.subspace_angles = angles
    return report, limit, sweep


# ---------------------------------------------------------------- inversion


def tikhonov_reconstruct(m: RepresentativeMatrix, data, lam: float) -> np.ndarray:
    """Minimize sum_ij (int V R_ij dx - d_ij)^2 + lam * int V^2 dx over V on the x-grid."""
    if lam < 0:
        raise ConfigurationError("regularization must be non-negative")
    d = np.asarray(data).reshape(-1)
    B = m.flattened()  # A / sqrt(dx) with A_{p,x} = R_p(x) dx
    if d.shape[0] != B.shape[0]:
        raise ConfigurationError(f"expected {B.shape[0]} data values, got {d.shape[0]}")
    if np.iscomplexobj(B) or np.iscomplexobj(d):
        B = np.vstack([B.real, B.imag])
        d = np.concatenate([d.real, d.imag])
    u, s, vt = np.linalg.svd(B, full_matrices=False)
    beta = u.T @ d
    if lam > 0:
        coef = s / (s ** 2 + lam) * beta
    else:
        keep = s > RANK_TOL * s[0] * max(B.shape)
        if not np.all(keep):
            warnings.warn("rank-deficient system: minimal-norm pseudo-inverse solution",
                          RankDeficiencyWarning)
        coef = np.where(keep, beta / np.where(keep, s, 1.0), 0.0)
    return (vt.T @ coef) / math.sqrt(m.grid.dx)


def forward_data(m: RepresentativeMatrix, vtilde) -> np.ndarray:
    """Noise-free pairings int V~ R_ij dx for every kernel."""
    v = vtilde if isinstance(vtilde, np.ndarray) else vtilde.value(m.grid.x)
    return m.flattened(weighted=False) @ v * m.grid.dx


def tikhonov_residual(m: RepresentativeMatrix, data, v: np.ndarray) -> float:
    return float(np.linalg.norm(forward_data(m, v) - np.asarray(data).reshape(-1)))
