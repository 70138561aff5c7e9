import math

import numpy as np
import pytest

from wignerlab.core import (ComplexField, GaussianSpec, Polynomial, Shifted, gaussian_packet,
                            l2_inner_product, make_phase_grid, dyadic_epsilon)
from wignerlab.errors import ConfigurationError
from wignerlab.representatives import rep_schrodinger
from wignerlab.schrodinger import (fredholm_lhs_schrodinger, solve_schrodinger,
                                   solve_schrodinger_perturbed, step_strang)

EPS = dyadic_epsilon(4)
VB = GaussianSpec(1.0, 0.25, 2 ** -3)


@pytest.fixture(scope="module")
def grid():
    return make_phase_grid(0, 0.5, 128, -0.375, 0.625, 256)


@pytest.fixture(scope="module")
def packet(grid):
    return gaussian_packet(GaussianSpec(1.0, 0.25, 2 ** -5, 2 ** -3), grid, EPS)


def test_plane_wave_is_kinetic_eigenmode(grid):
    xi = 2 * np.pi * 5 / grid.length_x
    phi = ComplexField(grid, np.exp(1j * xi * grid.x))
    dt = 1e-3
    out = step_strang(phi, Polynomial((0.0,)), EPS, dt)
    assert np.max(abs(out.values - phi.values * np.exp(-0.5j * EPS * xi ** 2 * dt))) < 1e-12


def test_constant_potential_is_global_phase(grid, packet):
    c, dt = 0.7, 1e-3
    free = step_strang(packet, Polynomial((0.0,)), EPS, dt)
    out = step_strang(packet, Polynomial((c,)), EPS, dt)
    np.testing.assert_allclose(abs(out.values), abs(free.values), atol=1e-14)
    assert np.max(abs(out.values - free.values * np.exp(-1j * c * dt / EPS))) < 1e-12


def test_strang_local_error_is_third_order(grid, packet):
    def defect(dt):
        one = step_strang(packet, VB, EPS, dt).values
        two = step_strang(step_strang(packet, VB, EPS, dt / 2), VB, EPS, dt / 2).values
        return np.linalg.norm(one - two)

    ratio = defect(2 ** -9) / defect(2 ** -10)
    assert 7.0 < ratio < 9.0


def test_forward_backward_roundtrip(grid, packet):
    fwd = solve_schrodinger(packet, VB, EPS, 2 ** -8, 2 ** -6)
    assert fwd.snapshots.shape == (5, grid.n_x)
    back = solve_schrodinger(fwd.at(fwd.n_steps), VB, EPS, 2 ** -8, 2 ** -6, "backward")
    rel = np.linalg.norm(back.at(0).values - packet.values) / np.linalg.norm(packet.values)
    assert rel < 1e-9


def test_norm_conserved(grid, packet):
    run = solve_schrodinger(packet, VB, EPS, 2 ** -8, 2 ** -6)
    n = run.norms()
    assert np.max(abs(n - n[0])) / n[0] < 1e-10


def test_free_dispersion_matches_closed_form():
    g = make_phase_grid(0, 1, 512, -1, 1, 8)
    eps, w, c, k0, T = dyadic_epsilon(4), 0.05, 0.4, 0.2, 2 ** -4
    phi = gaussian_packet(GaussianSpec(1.0, c, w, k0), g, eps)
    run = solve_schrodinger(phi, Polynomial((0.0,)), eps, 2 ** -10, T)
    x = g.x
    s = w ** 2 + 1j * eps * T
    exact = (np.sqrt(w ** 2 / s) * np.exp(-(x - c - k0 * T) ** 2 / (2 * s))
             * np.exp(1j * (k0 * x - 0.5 * k0 ** 2 * T) / eps))
    assert np.linalg.norm(run.at(run.n_steps).values - exact) / np.linalg.norm(exact) < 1e-4


def test_overlap_conserved(grid, packet):
    psi_T = gaussian_packet(GaussianSpec(1.0, 0.27, 2 ** -5, 0.1), grid, EPS)
    phi = solve_schrodinger(packet, VB, EPS, 2 ** -8, 2 ** -6)
    psi = solve_schrodinger(psi_T, VB, EPS, 2 ** -8, 2 ** -6, "backward")
    ov = np.array([l2_inner_product(phi.at(n), psi.at(n)) for n in range(phi.n_steps + 1)])
    assert np.max(abs(ov - ov[0])) / abs(ov[0]) < 1e-10


def test_gauge_covariance(grid, packet):
    c, T = 0.3, 2 ** -6
    a = solve_schrodinger(packet, VB, EPS, 2 ** -8, T).snapshots[-1]
    b = solve_schrodinger(packet, Shifted(VB, c), EPS, 2 ** -8, T).snapshots[-1]
    assert np.max(abs(a * np.exp(-1j * c * T / EPS) - b)) < 1e-10


def test_step_count_must_divide(grid, packet):
    with pytest.raises(ConfigurationError):
        solve_schrodinger(packet, VB, EPS, 0.003, 0.01)
    with pytest.raises(ConfigurationError):
        solve_schrodinger(packet, VB, EPS, 2 ** -8, 2 ** -6, "sideways")


# ---------------------------------------------------------------- perturbation


@pytest.fixture(scope="module")
def background(packet):
    return solve_schrodinger(packet, VB, EPS, 2 ** -8, 2 ** -6)


def test_perturbed_zero_source(background):
    out = solve_schrodinger_perturbed(background, Polynomial((0.0,)))
    assert np.all(out.values == 0)


def test_perturbed_linear(background):
    v = GaussianSpec(1.0, 0.26, 0.05)
    a = solve_schrodinger_perturbed(background, v).values
    b = solve_schrodinger_perturbed(background, GaussianSpec(2.0, 0.26, 0.05)).values
    assert np.linalg.norm(b - 2 * a) <= 1e-10 * np.linalg.norm(b)


def test_perturbed_needs_forward_background(grid, packet):
    back = solve_schrodinger(packet, VB, EPS, 2 ** -8, 2 ** -6, "backward")
    with pytest.raises(ConfigurationError):
        solve_schrodinger_perturbed(back, VB)


def test_fredholm_closure_converges_in_dt(grid):
    phi0 = gaussian_packet(GaussianSpec(1.0, 0.25, 2 ** -5, 2 ** -3), grid, EPS)
    psiT = gaussian_packet(GaussianSpec(1.0, 0.27, 2 ** -5, 2 ** -3), grid, EPS)
    vt = GaussianSpec(1.0, 0.26, 0.05)
    res = []
    for dt in (2 ** -8, 2 ** -9, 2 ** -10):
        phi = solve_schrodinger(phi0, VB, EPS, dt, 2 ** -6)
        psi = solve_schrodinger(psiT, VB, EPS, dt, 2 ** -6, "backward")
        lhs = fredholm_lhs_schrodinger(solve_schrodinger_perturbed(phi, vt), psiT)
        rhs = rep_schrodinger(phi, psi).pair(vt)
        res.append(abs(lhs - rhs) / abs(lhs))
    assert res[0] < 1e-2
    assert res[0] / res[1] > 3.5 and res[1] / res[2] > 3.5  # midpoint vs trapezoid, O(dt^2)
    assert math.isfinite(res[2])
