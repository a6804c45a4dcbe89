"""End-to-end acceptance checks, one test per release criterion.

Each test pins the tolerance it is graded against (3 Monte Carlo
standard errors unless an absolute tolerance is stated) and uses a
fixed seed so reruns are reproducible.  These deliberately exercise
the public API the way the experiments do, not internal helpers.
"""

import math

import numpy as np
import pytest

from conftest import combined_stderr, planar_wedge, stream

from conekit.bounds import (admissible_projection, analysis_statdim_bound,
                            edge_thresholds, min_admissible_m,
                            projected_condition_bound, sandwich_bounds)
from conekit.cli import main as cli_main
from conekit.condition import (classify_feasibility, empirical_gordon_check,
                               gordon_kappa_bound, kappa_bar,
                               min_perturbation_to_primal, restricted_sv)
from conekit.cones import GeneratorCone, NonnegOrthant, polar
from conekit.integral_geometry import (crofton_probability, verify_kinematic,
                                       verify_tqc)
from conekit.regularizers import (AnalysisInstance, build_BC_matrices,
                                  descent_statdim_analysis,
                                  finite_difference_matrix,
                                  tv_singular_values)
from conekit.solvers import crossing_from_rows, phase_transition_experiment
from conekit.statdim import (descent_statdim_l1, estimate_intrinsic_volumes,
                             estimate_statdim, stojnic_recipe_l1)


def tv_jump_instance(rng, n, jumps):
    """Piecewise-constant signal with `jumps` unit steps, plus its
    difference-domain support/sign pattern."""
    positions = rng.choice(np.arange(1, n), size=jumps, replace=False)
    steps = np.zeros(n)
    steps[np.sort(positions)] = rng.choice([-1.0, 1.0], size=jumps) * 2.0
    x0 = np.cumsum(steps) + 1.0
    D = finite_difference_matrix(n, "square_bidiagonal")
    c = D @ x0
    support = np.flatnonzero(np.abs(c) > 1e-12)
    signs = np.sign(c[support])
    return AnalysisInstance(D, x0), support, signs


def test_criterion_01_orthant_profile_matches_binomial():
    # n=10 at 1e5 samples: every bin within 3 stderr of C(10,k) 2^-10
    prof = estimate_intrinsic_volumes(NonnegOrthant(10), 100000, stream(1001))
    target = np.array([math.comb(10, k) for k in range(11)]) / 2.0 ** 10
    assert np.all(np.abs(prof.v - target) <= 3 * prof.stderr + 1e-12)


def test_criterion_02_complementarity_on_random_cones():
    # delta(C) + delta(polar C) = n within 3 combined stderr, 20 cones
    rng = np.random.default_rng(1002)
    for trial in range(20):
        n = int(rng.integers(3, 9))
        k = int(rng.integers(2, 2 * n))
        C = GeneratorCone(rng.standard_normal((n, k)))
        a = estimate_statdim(C, 10000, stream(1003, 2 * trial))
        b = estimate_statdim(polar(C), 10000, stream(1003, 2 * trial + 1))
        assert abs(a.mean + b.mean - n) <= 3 * combined_stderr(a, b)


def test_criterion_03_crofton_hit_rates():
    # random line meets the quadrant half the time, the octant a quarter
    r2 = crofton_probability(NonnegOrthant(2), 1, 100000, stream(1004))
    assert abs(r2.hit_rate - 0.5) <= 0.01
    r3 = crofton_probability(NonnegOrthant(3), 2, 100000, stream(1005))
    assert abs(r3.hit_rate - 0.25) <= 0.01


def test_criterion_04_kinematic_quadrant_pair():
    rep = verify_kinematic(NonnegOrthant(2), NonnegOrthant(2), 100000,
                           stream(1006))
    i = list(rep.ks).index(2)
    assert abs(rep.lhs[i] - 1.0 / 16.0) <= 3 * rep.lhs_stderr[i]
    assert abs(rep.rhs[i] - 1.0 / 16.0) <= 3 * rep.rhs_stderr[i]
    assert rep.verdict


def test_criterion_05_tqc_scaled_projection():
    # full-rank 2x3 map with unequal row scales; middle bin of the
    # image profile stays at 3/8, the orthant value
    T = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    rep = verify_tqc(T, NonnegOrthant(3), 100000, stream(1007))
    i = list(rep.ks).index(1)
    assert abs(rep.lhs[i] - 3.0 / 8.0) <= 3 * rep.lhs_stderr[i]
    assert rep.verdict


def test_criterion_06_tv_spectrum_formulas():
    for n in (2, 3, 17, 50, 200):
        spec = tv_singular_values(n)
        assert spec.max_mismatch_mixed <= 1e-8
        ks = np.arange(1, n + 1)
        mixed = np.sqrt(2.0 - 2.0 * np.cos((2 * ks - 1) * np.pi / (2 * n + 1)))
        dirichlet = np.sqrt(2.0 - 2.0 * np.cos(ks * np.pi / (n + 1)))
        assert np.max(np.abs(np.sort(spec.mixed_formula) - mixed)) <= 1e-12
        assert np.max(np.abs(np.sort(spec.dirichlet_formula)
                             - dirichlet)) <= 1e-12
        assert abs(spec.fro_sq - (2 * n - 1)) <= 1e-9
        assert abs(spec.dirichlet_sum_sq - 2 * n) <= 1e-9


def test_criterion_07_gordon_condition_bound():
    assert gordon_kappa_bound(np.eye(100), 25) == pytest.approx(3.0)
    rng = np.random.default_rng(1008)
    kappas = [np.linalg.cond(rng.standard_normal((25, 100)))
              for _ in range(200)]
    assert np.mean(kappas) <= 3.0
    # randomized diagonal maps with operator norm at most one
    for trial in range(10):
        sigma = rng.uniform(0.1, 1.0, size=60)
        rep = empirical_gordon_check(sigma, 20, 150, stream(1009, trial))
        assert rep.smin_ok and rep.smax_ok


def test_criterion_08_condition_sandwich_on_wedges():
    # delta(AC) <= R^2 delta(C) with grid-oracle R, and the classical
    # condition number bounds it from below symmetrically
    rng = np.random.default_rng(1010)
    for trial in range(20):
        alpha = float(rng.uniform(0.3, 2.5))
        theta0 = float(rng.uniform(0.0, 2 * np.pi))
        C = planar_wedge(alpha, theta0)
        A = rng.standard_normal((2, 2))
        while np.linalg.cond(A) > 20.0:
            A = rng.standard_normal((2, 2))
        delta_c = 0.5 + alpha / np.pi
        thetas = theta0 + np.arange(0.0, alpha + 1e-9, 2e-4)
        norms = np.linalg.norm(
            np.column_stack([np.cos(thetas), np.sin(thetas)]) @ A.T, axis=1)
        R_grid = norms.max() / norms.min()
        est = estimate_statdim(GeneratorCone(A @ C.V), 6000,
                               stream(1011, trial))
        lower, upper_R, _ = sandwich_bounds(delta_c, renegar_R=R_grid,
                                            kappa=np.linalg.cond(A))
        assert est.mean <= upper_R + 3 * est.stderr
        assert est.mean >= lower - 3 * est.stderr


def test_criterion_09_improved_analysis_bound():
    # kappa^{-2} delta_l1 + (1 - kappa^{-2}) n dominates the measured
    # analysis descent-cone statdim on square TV instances
    rng = np.random.default_rng(1012)
    n = 50
    for trial, jumps in enumerate((3, 6, 9)):
        inst, support, signs = tv_jump_instance(rng, n, jumps)
        est_l1 = descent_statdim_l1(n, support, signs, 5000,
                                    stream(1013, 2 * trial))
        est_an = descent_statdim_analysis(inst, 5000,
                                          stream(1013, 2 * trial + 1))
        bound = analysis_statdim_bound(inst, delta_l1=est_l1.mean)
        _, Cmat = build_BC_matrices(inst)
        kinv2 = 1.0 / np.linalg.cond(Cmat) ** 2
        assert bound == pytest.approx(kinv2 * est_l1.mean + (1 - kinv2) * n)
        assert est_an.mean <= bound + 3 * combined_stderr(est_an, est_l1)


def test_criterion_10_projected_condition_bound_tv():
    rng = np.random.default_rng(1014)
    n, eta = 50, 0.1
    inst, support, signs = tv_jump_instance(rng, n, 5)
    est_l1 = descent_statdim_l1(n, support, signs, 5000, stream(1015))
    delta_c = est_l1.mean
    m = min(n, int(math.ceil(min_admissible_m(delta_c, eta))) + 3)
    assert admissible_projection(delta_c, m, eta)
    kb2 = kappa_bar(np.linalg.inv(inst.D), m, 300, stream(1016)).mean
    bound = projected_condition_bound(delta_c, kb2, n, m, eta)
    assert bound == pytest.approx(kb2 * delta_c + (n - m) * eta)
    est_an = descent_statdim_analysis(inst, 5000, stream(1017))
    assert bound >= est_an.mean - 3 * combined_stderr(est_an, est_l1)


def test_criterion_11_l1_phase_transition_crossing():
    n, s, trials = 60, 6, 50
    rows = phase_transition_experiment(n, s, list(range(2, n + 1, 2)),
                                       trials, stream(1018))
    crossing = crossing_from_rows(rows)
    recipe = stojnic_recipe_l1(n, s).mean
    assert crossing is not None
    assert abs(crossing - recipe) <= 10.0
    window = edge_thresholds(recipe, n, 0.05)
    assert window.m_fail <= crossing <= window.m_succeed


def test_criterion_12_perturbation_distance_matches_sv():
    rng = np.random.default_rng(14)
    A2 = np.eye(2) + 0.2 * rng.standard_normal((2, 2))
    C2 = planar_wedge(0.9, 0.1)
    D2 = planar_wedge(1.1, 0.3)
    # same pair embedded in R^3 with an inert third coordinate
    pad = np.zeros((1, 2))
    C3 = GeneratorCone(np.vstack([C2.V, pad]))
    D3 = GeneratorCone(np.vstack([D2.V, pad]))
    A3 = np.eye(3)
    A3[:2, :2] = A2
    for A, C, D, k in ((A2, C2, D2, 0), (A3, C3, D3, 1)):
        nth = C.V.shape[0]
        thetas = np.arange(0.1, 0.1 + 0.9 + 1e-9, 2e-4)
        X = np.zeros((thetas.size, nth))
        X[:, 0], X[:, 1] = np.cos(thetas), np.sin(thetas)
        P, _, _ = D.project_batch(X @ A.T)
        sigma_grid = np.linalg.norm(P, axis=1).min()
        assert sigma_grid > 0.05  # genuinely infeasible start
        sv = restricted_sv(A, C, D, stream=stream(1019, 2 * k))
        assert abs(sv.value - sigma_grid) <= 1e-3
        dA, _ = min_perturbation_to_primal(A, C, D,
                                           stream=stream(1019, 2 * k + 1))
        assert abs(np.linalg.norm(dA, 2) - sigma_grid) <= 1e-3
        out = classify_feasibility(A + dA, C, D, stream=stream(1020, k))
        assert out.status == "PrimalFeasible"


def test_criterion_13_seeded_runs_are_byte_identical(tmp_path):
    cases = [
        ["tv-statdim", "--n", "8", "--s-min", "2", "--s-max", "3",
         "--samples", "400", "--seed", "9"],
        ["phase", "--n", "10", "--s", "2", "--m-min", "4", "--m-max", "10",
         "--m-step", "2", "--trials", "10", "--seed", "4"],
    ]
    for idx, argv in enumerate(cases):
        paths = [tmp_path / f"run{idx}_{j}.csv" for j in (0, 1)]
        for p in paths:
            assert cli_main(argv + ["--out", str(p)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()
