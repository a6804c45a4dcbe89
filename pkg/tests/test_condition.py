"""Restricted singular values, Renegar condition numbers, feasibility."""

import math

import numpy as np
import pytest

from conftest import planar_wedge, stream

from conekit.condition import (classify_feasibility, condition_report,
                               empirical_gordon_check, gordon_kappa_bound,
                               kappa_bar, min_perturbation_to_primal,
                               renegar, renegar_single, restricted_norm,
                               restricted_sv)
from conekit.cones import (GeneratorCone, NonnegOrthant, Subspace, full_space,
                           polar, project)
from conekit.numerics import haar_orthogonal
from conekit.regularizers import finite_difference_matrix


def grid_restricted(A, C, D, which, resolution=1e-3):
    """Planar brute-force oracle for n = 2 source cones.

    Scans unit vectors of C at the given angular resolution and returns
    the max (which='norm') or min (which='sv') of ||Proj_D(Ax)||.
    """
    thetas = np.arange(0.0, 2 * math.pi, resolution)
    X = np.column_stack([np.cos(thetas), np.sin(thetas)])
    P, _, _ = C.project_batch(X)
    keep = np.linalg.norm(P - X, axis=1) < 1e-9
    X = X[keep]
    img = X @ A.T
    PD, _, _ = D.project_batch(img)
    vals = np.linalg.norm(PD, axis=1)
    return float(vals.max() if which == "norm" else vals.min())


# ---------------------------------------------------------------------------
# restricted norm
# ---------------------------------------------------------------------------

def test_restricted_norm_full_spaces_is_operator_norm():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 3))
    out = restricted_norm(A, full_space(3), full_space(4))
    assert abs(out.value - np.linalg.norm(A, 2)) <= 1e-9
    assert out.method == "exact"


def test_restricted_norm_single_ray():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((4, 3))
    C = Subspace(np.eye(3)[:, :1])
    out = restricted_norm(A, C, full_space(4))
    assert abs(out.value - np.linalg.norm(A[:, 0])) <= 1e-9


def test_restricted_norm_matches_grid_on_wedges():
    rng = np.random.default_rng(2)
    for i in range(4):
        A = rng.standard_normal((2, 2))
        C = planar_wedge(0.4 + 0.5 * i, 0.3 * i)
        D = planar_wedge(0.9, 0.2 + 0.4 * i)
        out = restricted_norm(A, C, D, stream=stream(200, i))
        ref = grid_restricted(A, C, D, "norm")
        assert abs(out.value - ref) <= 1e-3


def test_restricted_norm_certificate_attains_value():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((3, 3))
    C = NonnegOrthant(3)
    D = NonnegOrthant(3)
    out = restricted_norm(A, C, D, stream=stream(201))
    x = np.asarray(out.certificate)
    assert abs(np.linalg.norm(x) - 1.0) <= 1e-8
    attained = np.linalg.norm(project(D, A @ x).point)
    assert attained <= out.value + 1e-8
    assert attained >= out.value - 1e-6


# ---------------------------------------------------------------------------
# restricted minimum singular value
# ---------------------------------------------------------------------------

def test_restricted_sv_full_spaces_is_smallest_singular_value():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((4, 3))
    out = restricted_sv(A, full_space(3), full_space(4))
    assert abs(out.value - np.linalg.svd(A, compute_uv=False)[-1]) <= 1e-9


def test_restricted_sv_single_ray():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((3, 3))
    C = GeneratorCone(np.eye(3)[:, :1])
    D = NonnegOrthant(3)
    out = restricted_sv(A, C, D)
    expect = np.linalg.norm(np.maximum(A[:, 0], 0.0))
    assert abs(out.value - expect) <= 1e-8


def test_restricted_sv_vanishes_on_constructed_instance():
    # send the cone's edge direction into the polar of D so the minimum is 0
    C = planar_wedge(math.pi / 4, 0.0)          # edge at angle 0 is e1
    D = NonnegOrthant(2)
    A = np.array([[-1.0, 0.3], [-0.5, 0.2]])    # A e1 < 0 componentwise
    out = restricted_sv(A, C, D, stream=stream(202))
    assert out.value <= 1e-6
    assert grid_restricted(A, C, D, "sv") <= 1e-6


def test_restricted_sv_matches_grid_on_wedges():
    rng = np.random.default_rng(6)
    for i in range(4):
        A = rng.standard_normal((2, 2))
        C = planar_wedge(0.5 + 0.4 * i, 0.25 * i)
        D = planar_wedge(1.1, 0.15 * i)
        out = restricted_sv(A, C, D, stream=stream(203, i))
        ref = grid_restricted(A, C, D, "sv")
        assert abs(out.value - ref) <= 1e-3


def test_complementary_split_of_image_norm():
    # ||Ax||^2 = ||Proj_D(Ax)||^2 + ||Proj_polar(D)(Ax)||^2 pointwise, so at
    # a full source space the restricted pieces cannot both vanish unless A=0
    rng = np.random.default_rng(7)
    A = rng.standard_normal((3, 3))
    D = NonnegOrthant(3)
    x = rng.standard_normal(3)
    x /= np.linalg.norm(x)
    y = A @ x
    a = np.linalg.norm(project(D, y).point)
    b = np.linalg.norm(project(polar(D), y).point)
    assert abs(a * a + b * b - y @ y) <= 1e-10


def test_monotonicity_in_both_cones():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((2, 2))
    C_small = planar_wedge(0.4, 0.1)
    C_big = planar_wedge(1.2, 0.0)     # contains C_small
    D_small = planar_wedge(0.5, 0.3)
    D_big = planar_wedge(1.4, 0.0)     # contains D_small
    # growing the source cone can only lower the restricted minimum
    s_small = grid_restricted(A, C_small, D_small, "sv")
    s_big = grid_restricted(A, C_big, D_small, "sv")
    assert s_big <= s_small + 1e-9
    # growing the target cone can only raise it
    s_dbig = grid_restricted(A, C_small, D_big, "sv")
    assert s_dbig >= s_small - 1e-9
    # the library values agree with the oracle on all four combinations
    for C in (C_small, C_big):
        for D in (D_small, D_big):
            out = restricted_sv(A, C, D, stream=stream(204))
            assert abs(out.value - grid_restricted(A, C, D, "sv")) <= 1e-3


def test_lower_bound_certifies_membership_scaling():
    # sigma_{C->D}(A) > 0 certifies ||Proj_D(Ax)|| >= sigma ||x|| on C
    rng = np.random.default_rng(9)
    A = np.eye(2) + 0.1 * rng.standard_normal((2, 2))
    C = planar_wedge(0.8, 0.2)
    D = planar_wedge(1.2, 0.1)
    out = restricted_sv(A, C, D, stream=stream(205))
    for _ in range(500):
        x = rng.standard_normal(2)
        p = project(C, x).point
        if np.linalg.norm(p) < 1e-12:
            continue
        lhs = np.linalg.norm(project(D, A @ p).point)
        assert lhs >= (out.value - 1e-6) * np.linalg.norm(p)


# ---------------------------------------------------------------------------
# Renegar condition number
# ---------------------------------------------------------------------------

def test_renegar_full_spaces_is_matrix_condition_number():
    rng = np.random.default_rng(10)
    A = rng.standard_normal((3, 3))
    R = renegar(A, full_space(3), full_space(3))
    assert abs(R - np.linalg.cond(A, 2)) <= 1e-8


def test_renegar_orthogonal_matrix_is_one():
    Q = haar_orthogonal(4, stream(206))
    R = renegar(Q, full_space(4), full_space(4))
    assert abs(R - 1.0) <= 1e-9


def test_renegar_pair_at_least_one():
    rng = np.random.default_rng(11)
    for i in range(5):
        A = rng.standard_normal((2, 2))
        C = planar_wedge(0.7, 0.2 * i)
        D = planar_wedge(1.0, 0.1 * i)
        R = renegar(A, C, D, stream=stream(207, i))
        assert R >= 1.0 - 1e-9


def test_renegar_single_cone_below_matrix_condition():
    # restricting the minimum to a cone can only raise it, so the
    # single-cone condition number never exceeds the classical one
    rng = np.random.default_rng(24)
    for i in range(5):
        A = rng.standard_normal((3, 3))
        C = GeneratorCone(np.abs(rng.standard_normal((3, 4))))
        R = renegar_single(A, C, stream=stream(230, i))
        assert 1.0 - 1e-9 <= R <= np.linalg.cond(A, 2) + 1e-6


# ---------------------------------------------------------------------------
# feasibility classification
# ---------------------------------------------------------------------------

def test_zero_matrix_is_ill_posed():
    out = classify_feasibility(np.zeros((3, 3)), NonnegOrthant(3),
                               NonnegOrthant(3))
    assert out.status == "IllPosed"


def test_gaussian_instances_never_ill_posed():
    rng = np.random.default_rng(12)
    C = NonnegOrthant(3)
    D = NonnegOrthant(3)
    statuses = []
    for _ in range(1000):
        A = rng.standard_normal((3, 3))
        statuses.append(classify_feasibility(A, C, D).status)
    counts = {s: statuses.count(s) for s in set(statuses)}
    assert counts.get("IllPosed", 0) == 0
    assert set(counts) <= {"PrimalFeasible", "DualFeasible", "Ambiguous"}
    assert counts.get("Ambiguous", 0) == 0


def test_classification_matches_grid_oracle():
    # primal feasible <=> some x >= 0 on the unit arc has A x <= 0
    rng = np.random.default_rng(13)
    C = NonnegOrthant(2)
    D = NonnegOrthant(2)
    thetas = np.linspace(0.0, math.pi / 2, 4001)
    X = np.column_stack([np.cos(thetas), np.sin(thetas)])
    for _ in range(50):
        A = rng.standard_normal((2, 2))
        out = classify_feasibility(A, C, D)
        primal_hit = bool(np.any(np.all(X @ A.T <= 1e-9, axis=1)))
        dual_hit = bool(np.any(np.all(X @ (-A) <= 1e-9, axis=1)))
        if primal_hit:
            assert out.status == "PrimalFeasible"
            assert out.primal_margin <= out.tol
        elif dual_hit:
            assert out.status == "DualFeasible"
        assert out.status in ("PrimalFeasible", "DualFeasible")


# ---------------------------------------------------------------------------
# minimal perturbation to primal feasibility
# ---------------------------------------------------------------------------

def test_perturbation_zero_when_already_feasible():
    # -I maps the orthant into the nonpositive orthant = polar of D
    A = -np.eye(2)
    dA, info = min_perturbation_to_primal(A, NonnegOrthant(2),
                                          NonnegOrthant(2))
    assert np.linalg.norm(dA, 2) <= 1e-9


def test_perturbation_norm_matches_restricted_sv():
    A = np.diag([2.0, 1.0])
    dA, info = min_perturbation_to_primal(A, full_space(2), full_space(2))
    assert abs(np.linalg.norm(dA, 2) - 1.0) <= 1e-8
    s = np.linalg.svd(A + dA, compute_uv=False)
    assert s[-1] <= 1e-8


def test_perturbation_on_wedges_lands_on_boundary():
    rng = np.random.default_rng(14)
    A = np.eye(2) + 0.2 * rng.standard_normal((2, 2))
    C = planar_wedge(0.9, 0.1)
    D = planar_wedge(1.1, 0.3)
    sv = restricted_sv(A, C, D, stream=stream(208))
    dA, info = min_perturbation_to_primal(A, C, D, stream=stream(209))
    assert abs(np.linalg.norm(dA, 2) - sv.value) <= 1e-6
    assert grid_restricted(A + dA, C, D, "sv") <= 1e-3


# ---------------------------------------------------------------------------
# randomized condition functionals
# ---------------------------------------------------------------------------

def test_kappa_bar_identity_is_one():
    est = kappa_bar(np.eye(5), 3, 200, stream(210))
    assert abs(est.mean - 1.0) <= 1e-12
    assert est.stderr <= 1e-12


def test_kappa_bar_square_case_is_deterministic():
    A = np.diag([3.0, 1.0])
    est = kappa_bar(A, 2, 150, stream(211))
    assert abs(est.mean - 9.0) <= 1e-10
    assert est.stderr <= 1e-10


def test_kappa_bar_row_subsampling_beats_full_condition():
    D = finite_difference_matrix(50)
    A = np.linalg.inv(D)
    full_kappa2 = np.linalg.cond(D, 2) ** 2
    est = kappa_bar(A, 25, 400, stream(212))
    assert math.isfinite(est.mean)
    assert est.mean + 3 * est.stderr < 0.5 * full_kappa2


def test_gordon_bound_identity_case():
    assert abs(gordon_kappa_bound(np.eye(100), 25) - 3.0) <= 1e-12


def test_gordon_bound_domain():
    with pytest.raises(ValueError):
        gordon_kappa_bound(np.eye(4), 4)


def test_empirical_gordon_identity_covariance():
    rep = empirical_gordon_check(np.ones(100), 25, 200, stream(213))
    assert rep.smin_mean >= 5.0
    assert rep.smin_ok and rep.smax_ok
    assert rep.smax_mean <= rep.smax_upper


def test_empirical_gordon_zero_covariance():
    rep = empirical_gordon_check(np.zeros(10), 3, 100, stream(214))
    assert rep.smin_mean == 0.0
    assert rep.smax_mean == 0.0


def test_empirical_gordon_random_spectra():
    # diagonal factors are normalized to ||Sigma|| <= 1 as required
    rng = np.random.default_rng(15)
    for i in range(10):
        sigma = rng.uniform(0.05, 1.0, size=30)
        sigma[rng.integers(0, 30)] = 1.0
        m = 6
        rep = empirical_gordon_check(sigma, m, 150, stream(215, i))
        fro = np.linalg.norm(sigma)
        assert rep.smax_mean <= fro + math.sqrt(m) + 3 * rep.smax_stderr
        assert rep.smax_ok


def test_empirical_gordon_rejects_unnormalized_spectrum():
    with pytest.raises(ValueError):
        empirical_gordon_check(np.full(10, 2.0), 3, 100, stream(217))


# ---------------------------------------------------------------------------
# aggregate report
# ---------------------------------------------------------------------------

def test_condition_report_consistency():
    rng = np.random.default_rng(16)
    A = rng.standard_normal((2, 2))
    C = planar_wedge(0.8, 0.0)
    D = planar_wedge(1.0, 0.2)
    rep = condition_report(A, C, D, stream=stream(216))
    assert abs(rep.op_norm - np.linalg.norm(A, 2)) <= 1e-9
    assert rep.renegar_R >= 1.0 - 1e-9
    denom = max(rep.sigma_CD, rep.sigma_DC_transposed)
    assert abs(rep.renegar_R - rep.op_norm / denom) <= 1e-6 * rep.renegar_R
    assert abs(rep.kappa - np.linalg.cond(A, 2)) <= 1e-8
