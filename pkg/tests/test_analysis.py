import math
import warnings

import numpy as np
import pytest

from wignerlab.analysis import (MatrixAssemblyError, RankDeficiencyWarning, RepresentativeMatrix,
                                assemble_rep_matrix, centers_on_interval, err_curve_and_slope,
                                forward_data, leading_subspace, relative_singular_values,
                                singular_value_errors, subspace_angle, sweep_epsilon,
                                tikhonov_reconstruct, tikhonov_residual)
from wignerlab.core import GaussianSpec, dyadic_epsilon
from wignerlab.errors import ConfigurationError, DegenerateMatrixError
from wignerlab.representatives import KernelSetup, liouville_kernel, wigner_kernel

VB = GaussianSpec(1.0, 0.25, 2 ** -3)
DATA = GaussianSpec(1.0, 0.25, 2 ** -4, 2 ** -3, 2 ** -3)
TRUTH = GaussianSpec(0.1, 0.25, 2 ** -5)


@pytest.fixture(scope="module")
def liouville_matrix(desk_setup):
    return assemble_rep_matrix(centers_on_interval(0.1875, 0.3125, 2 ** -6),
                               centers_on_interval(0.1875, 0.3125, 2 ** -6), desk_setup,
                               "liouville")


# ---------------------------------------------------------------- assembly


def test_centers():
    c = centers_on_interval(0.1875, 0.3125, 2 ** -6)
    assert len(c) == 9 and c[0] == 0.1875 and c[-1] == 0.3125
    assert len(centers_on_interval(0.1875, 0.3125, 2 ** -10)) == 129


def test_one_by_one_matches_standalone(desk_setup):
    eps = dyadic_epsilon(4)
    m = assemble_rep_matrix([0.25], [0.26], desk_setup, "wigner", eps)
    R = wigner_kernel(desk_setup, eps, 0.25, 0.26)
    assert m.entries.shape == (1, 1, desk_setup.grid.n_x)
    assert np.array_equal(m.entries[0, 0], R.values)
    k = m.kernel(0, 0)
    assert k.provenance == {"b_x": 0.25, "c_x": 0.26}


def test_liouville_matrix_matches_recomputation(desk_setup):
    c = centers_on_interval(0.21875, 0.28125, 2 ** -6)
    cached = assemble_rep_matrix(c, c, desk_setup, "liouville")
    fresh = assemble_rep_matrix(c, c, desk_setup, "liouville", cache=False)
    assert np.array_equal(cached.entries, fresh.entries)
    for i, j in ((0, 4), (2, 2), (3, 1)):
        assert np.array_equal(cached.entries[i, j],
                              liouville_kernel(desk_setup, c[i], c[j]).values)


def test_assembly_errors(desk_setup):
    with pytest.raises(ConfigurationError):
        assemble_rep_matrix([0.6], [0.25], desk_setup, "liouville")
    with pytest.raises(ConfigurationError):
        assemble_rep_matrix([0.25], [0.25], desk_setup, "wigner")
    with pytest.raises(ConfigurationError):
        assemble_rep_matrix([0.25], [0.25], desk_setup, "schrodinger")


def test_assembly_names_failing_pair(desk_setup):
    # a step that violates the CFL bound fails inside the solver
    bad = KernelSetup(desk_setup.grid, VB, DATA, DATA, 2 ** -5, 2 ** -4)
    with pytest.raises(MatrixAssemblyError) as info:
        assemble_rep_matrix([0.25], [0.25], bad, "wigner", dyadic_epsilon(4), cache=False)
    assert info.value.pair == (0, 0) and info.value.exit_code == 2


def test_matrix_shape_checked(small_grid):
    with pytest.raises(ConfigurationError):
        RepresentativeMatrix(small_grid, np.array([0.1]), np.array([0.2]), np.zeros((1, 2, 64)),
                             "liouville")


# ---------------------------------------------------------------- singular values


def test_identity_singular_values():
    assert np.allclose(relative_singular_values(np.eye(3)), 1.0, atol=1e-15)


def test_rank_one(rng):
    a = np.outer(rng.normal(size=6), rng.normal(size=8))
    s = relative_singular_values(a)
    assert s[0] == 1.0 and np.all(s[1:] < 1e-12)


def test_gram_matrix_oracle(rng):
    a = rng.normal(size=(10, 10))
    lam = np.sort(np.linalg.eigvalsh(a.T @ a))[::-1]
    s = np.sqrt(np.clip(lam, 0, None))
    assert np.max(abs(relative_singular_values(a) - s / s[0])) < 1e-8


def test_scale_invariance(liouville_matrix):
    s = relative_singular_values(liouville_matrix)
    scaled = RepresentativeMatrix(liouville_matrix.grid, liouville_matrix.centers_i,
                                  liouville_matrix.centers_j, -3.7 * liouville_matrix.entries,
                                  "liouville")
    assert np.max(abs(relative_singular_values(scaled) - s)) < 1e-14


def test_degenerate_matrix():
    with pytest.raises(DegenerateMatrixError):
        relative_singular_values(np.zeros((3, 4)))


def test_sv_errors_trivial(liouville_matrix):
    m = liouville_matrix
    doubled = RepresentativeMatrix(m.grid, m.centers_i, m.centers_j, 2 * m.entries, m.kind)
    out = singular_value_errors([(0.1, m), (0.05, doubled)], m)
    assert sorted(out) == [2, 3, 4, 5]
    for v in out.values():
        assert np.max(v) < 1e-12


def test_sv_errors_skip_vanishing_index():
    limit = np.diag([1.0, 0.5, 0.0])
    with pytest.warns(UserWarning, match="skipped"):
        out = singular_value_errors([(0.1, np.diag([1.0, 0.4, 0.1]))], limit, (2, 3))
    assert list(out) == [2] and abs(out[2][0] - 0.2) < 1e-14


# ---------------------------------------------------------------- subspace angles


def test_angle_identical(liouville_matrix):
    assert subspace_angle(liouville_matrix, liouville_matrix, 3) < 1e-12


def test_angle_orthogonal():
    a = np.diag([2.0, 1.0, 0.0, 0.0])
    b = np.diag([0.0, 0.0, 2.0, 1.0])
    assert abs(subspace_angle(a, b, 1) - 1.0) < 1e-12
    assert abs(subspace_angle(a, b, 2) - 1.0) < 1e-12


def test_angle_rotation_invariant(rng):
    q, _ = np.linalg.qr(rng.normal(size=(20, 3)))
    a = q @ np.diag([3.0, 2.0, 1.0])
    rot, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    b = (q @ rot) @ np.diag([5.0, 4.0, 3.5])
    assert subspace_angle(a, b, 3) < 1e-10


def test_angle_symmetric(rng):
    a = rng.normal(size=(15, 6))
    b = a + 0.1 * rng.normal(size=(15, 6))
    for k in (1, 3):
        assert abs(subspace_angle(a, b, k) - subspace_angle(b, a, k)) < 1e-10


def test_angle_rank_check():
    a = np.diag([1.0, 1e-14, 0.0])
    with pytest.raises(DegenerateMatrixError):
        leading_subspace(a, 2)
    with pytest.raises(DegenerateMatrixError):
        leading_subspace(a, 4)


# ---------------------------------------------------------------- slopes


def test_slope_exact_powers():
    eps = np.array([dyadic_epsilon(n) for n in range(3, 7)])
    assert abs(err_curve_and_slope(eps, 3.0 * eps ** 2).fitted_slope - 2.0) < 1e-9
    assert abs(err_curve_and_slope(eps, 0.5 * eps).fitted_slope - 1.0) < 1e-9


def test_slope_sorts_and_flags_monotonicity():
    r = err_curve_and_slope([0.1, 0.4, 0.2], [0.01, 0.16, 0.04])
    assert list(r.eps_values) == [0.4, 0.2, 0.1] and r.strictly_decreasing
    assert not err_curve_and_slope([0.4, 0.2, 0.1], [0.1, 0.2, 0.05]).strictly_decreasing


def test_slope_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        err_curve_and_slope([0.4, 0.2, 0.1], [0.1, 0.0, 0.05])
    with pytest.raises(ConfigurationError):
        err_curve_and_slope([0.4, 0.2], [0.1, 0.05])


# ---------------------------------------------------------------- Tikhonov


def test_tikhonov_zero_data(liouville_matrix):
    v = tikhonov_reconstruct(liouville_matrix, np.zeros(81), 1e-6)
    assert not v.any()


def test_tikhonov_large_lambda(liouville_matrix):
    d = forward_data(liouville_matrix, TRUTH)
    norms = [np.linalg.norm(tikhonov_reconstruct(liouville_matrix, d, lam))
             for lam in (1e-6, 1e0, 1e6, 1e12)]
    assert all(a > b for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-6 * norms[0]


def test_tikhonov_residual_monotone(liouville_matrix):
    d = forward_data(liouville_matrix, TRUTH)
    res = [tikhonov_residual(liouville_matrix, d, tikhonov_reconstruct(liouville_matrix, d, lam))
           for lam in (1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0)]
    assert all(b >= a * (1 - 1e-9) for a, b in zip(res, res[1:]))


def test_tikhonov_synthetic_inversion(liouville_matrix):
    m = liouville_matrix
    truth = TRUTH.value(m.grid.x)
    v = tikhonov_reconstruct(m, forward_data(m, truth), 1e-8)
    # compare within the leading singular subspace over x
    q = leading_subspace(m, 9)
    projected = q @ (q.T @ truth)
    assert np.corrcoef(projected, q @ (q.T @ v))[0, 1] > 0.9
    assert np.corrcoef(truth, v)[0, 1] > 0.9


def test_tikhonov_rank_deficient_flagged(liouville_matrix):
    d = forward_data(liouville_matrix, TRUTH)
    with pytest.warns(RankDeficiencyWarning):
        v = tikhonov_reconstruct(liouville_matrix, d, 0.0)
    assert np.all(np.isfinite(v))


def test_tikhonov_bad_inputs(liouville_matrix):
    with pytest.raises(ConfigurationError):
        tikhonov_reconstruct(liouville_matrix, np.zeros(81), -1.0)
    with pytest.raises(ConfigurationError):
        tikhonov_reconstruct(liouville_matrix, np.zeros(80), 1.0)


def test_full_rank_lambda_zero_is_silent(small_grid):
    m = RepresentativeMatrix(small_grid, np.arange(8.0) / 16, np.array([0.1]),
                             np.eye(64)[:8, None, :] / math.sqrt(small_grid.dx), "liouville")
    with warnings.catch_warnings():
        warnings.simplefilter("error", RankDeficiencyWarning)
        d = np.arange(1.0, 9.0)
        v = tikhonov_reconstruct(m, d, 0.0)
    assert tikhonov_residual(m, d, v) < 1e-12


# ---------------------------------------------------------------- asymptotic range


def test_rate_in_asymptotic_range(desk):
    """Informational companion to the headline rate: below eps ~ 1/(pi 2^6) the
    eps^2 term dominates and Err_R drops ~4x per halving."""
    setup = KernelSetup(desk.grid(), desk.potential(), desk.phase_data("f"),
                        desk.phase_data("g"), 2 ** -10, desk["time.t_final"])
    eps = [dyadic_epsilon(n) for n in range(6, 10)]
    report, _, _ = sweep_epsilon(setup, eps, 0.25, 0.25)
    print("asymptotic Err_R:", ", ".join(f"{e:.6g}" for e in report.err_values),
          f"slope {report.fitted_slope:.4f}")
    assert report.strictly_decreasing
    assert 1.6 <= report.fitted_slope <= 2.4
