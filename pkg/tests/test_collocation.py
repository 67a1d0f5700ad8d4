"""Point sampling, system assembly, and the least-squares solve."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rbfpde import (CollocationSet, ConstraintEquation, LinearOperatorSpec,
                    RbfKernel, SolutionField, evaluate, kernel_matrix,
                    sample_points, solve_linear, stack_system)
from rbfpde.collocation import interior_grid, rhs_values


def test_interior_grid_rule():
    # lo + (hi - lo) * k / (n + 1), endpoints excluded
    assert np.allclose(interior_grid(3, 0.0, 1.0), [0.25, 0.5, 0.75])
    assert np.allclose(interior_grid(1, 2.0, 4.0), [3.0])


def test_sample_points_interior_default():
    cs = sample_points([(0.0, 1.0), (0.0, 1.0)], (3, 3))
    dom = cs.subset("domain")
    assert dom.shape == (9, 2)
    assert set(np.round(dom[:, 0], 12)) == {0.25, 0.5, 0.75}
    assert dom.min() > 0.0 and dom.max() < 1.0


def test_sample_points_inclusive_hits_endpoints():
    cs = sample_points([(0.0, 1.0), (0.0, 2.0)], (3, 5), inclusive=True)
    dom = cs.subset("domain")
    assert {0.0, 1.0} <= set(dom[:, 0])
    assert {0.0, 2.0} <= set(dom[:, 1])


def test_sample_points_labels_and_counts():
    cs = sample_points([(0.0, 1.0), (0.0, 1.0)], (4, 3),
                       n_initial=5, n_boundary=6)
    assert len(cs) == 12 + 5 + 12
    assert cs.subset("domain").shape[0] == 12
    ic = cs.subset("initial")
    assert ic.shape[0] == 5
    assert np.all(ic[:, 1] == 0.0)
    # both faces carry the same spatial-coordinate label
    bc = cs.subset("boundary")
    assert bc.shape[0] == 12
    assert set(bc[:, 0]) == {0.0, 1.0}
    assert cs.subset("boundary:0").shape[0] == 12


def test_subset_returns_plain_array():
    cs = sample_points([(0.0, 1.0), (0.0, 1.0)], (2, 2))
    assert isinstance(cs.subset("domain"), np.ndarray)


def test_time_only_box():
    cs = sample_points([(0.0, 10.0)], 8, n_initial=1)
    assert len(cs) == 9
    assert np.all(cs.subset("initial") == [[0.0]])
    with pytest.raises(ValueError):
        sample_points([(0.0, 10.0)], 8, n_initial=3)
    with pytest.raises(ValueError):
        sample_points([(0.0, 10.0)], 8, n_boundary=4)


def test_degenerate_box_rejected():
    with pytest.raises(ValueError):
        sample_points([(1.0, 1.0), (0.0, 1.0)], (2, 2))


def test_volume():
    cs = sample_points([(0.0, 2.0), (0.0, 3.0)], (2, 2))
    assert cs.volume == 6.0
    bare = CollocationSet(np.zeros((1, 2)), ["domain"])
    with pytest.raises(ValueError):
        bare.volume


def test_label_count_mismatch():
    with pytest.raises(ValueError):
        CollocationSet(np.zeros((2, 1)), ["domain"])


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 30), lo=st.floats(-5, 5), width=st.floats(0.1, 10))
def test_interior_grid_stays_strictly_inside(n, lo, width):
    g = interior_grid(n, lo, lo + width)
    assert g.shape == (n,)
    assert np.all(g > lo) and np.all(g < lo + width)
    assert np.all(np.diff(g) > 0)


def test_kernel_matrix_values():
    k = RbfKernel("gaussian", 1.0)
    assert kernel_matrix([[0.0]], [[0.0]], k) == pytest.approx([[1.0]])
    M = kernel_matrix([[0.0], [1.0]], [[0.0]], k)
    assert M == pytest.approx([[1.0, np.exp(-1.0)]])


def test_kernel_matrix_duplicate_centers_lose_rank():
    cen = np.array([[0.0], [0.0], [1.0]])
    K = kernel_matrix(cen, cen, RbfKernel("gaussian", 1.0))
    assert np.linalg.matrix_rank(K) == 2


def test_solve_identity():
    res = solve_linear(np.eye(3), np.array([1.0, -2.0, 3.0]))
    assert np.allclose(res.coeffs, [1.0, -2.0, 3.0])
    assert res.rank == 3
    assert res.warnings == []


def test_solve_overdetermined_normal_equations_oracle():
    # F = [1, 1]^T, h = (0, 2): normal equations give a = 1
    res = solve_linear(np.array([[1.0], [1.0]]), np.array([0.0, 2.0]))
    assert res.coeffs == pytest.approx([1.0])


def test_solve_rank_deficient_reports_and_takes_minimum_norm():
    res = solve_linear(np.ones((2, 2)), np.array([2.0, 2.0]))
    assert res.rank == 1
    assert len(res.warnings) == 1
    assert "rank-deficient" in res.warnings[0]
    # minimum-norm representative of x1 + x2 = 2
    assert np.allclose(res.coeffs, [1.0, 1.0], atol=1e-12)


def test_solve_validation():
    with pytest.raises(ValueError):
        solve_linear(np.ones((2, 3)), np.zeros(2))  # underdetermined
    with pytest.raises(ValueError):
        solve_linear(np.ones((3, 2)), np.zeros(2))  # shape mismatch
    F = np.eye(2)
    F[0, 0] = np.nan
    with pytest.raises(ValueError):
        solve_linear(F, np.zeros(2))


def test_least_squares_residual_orthogonality():
    """At the LS minimum the residual is orthogonal to the column space."""
    rng = np.random.default_rng(0)
    F = rng.standard_normal((60, 12))
    h = rng.standard_normal(60)
    a = solve_linear(F, h).coeffs
    r = F @ a - h
    assert np.linalg.norm(F.T @ r) <= 1e-6 * np.linalg.norm(F) * np.linalg.norm(r)


def test_rhs_values_forms():
    pts = np.array([[0.0, 0.0], [1.0, 2.0]])
    assert np.allclose(rhs_values(3.0, pts), [3.0, 3.0])
    assert np.allclose(rhs_values([1.0, 2.0], pts), [1.0, 2.0])
    assert np.allclose(rhs_values(lambda p: p[:, 0] + p[:, 1], pts), [0.0, 3.0])
    with pytest.raises(ValueError):
        rhs_values([1.0, 2.0, 3.0], pts)


def test_operator_spec_validation():
    with pytest.raises(ValueError):
        LinearOperatorSpec([])
    op = LinearOperatorSpec.identity(2)
    assert op.terms == [(1.0, (0, 0))]


def test_stack_system_layout():
    cen = np.array([[0.2, 0.3], [0.7, 0.6], [0.4, 0.9]])
    k = RbfKernel("gaussian", 1.5)
    ident = LinearOperatorSpec.identity(2)
    ddx = LinearOperatorSpec([(1.0, (1, 0))])
    eq1 = ConstraintEquation(ident, 1.0, cen[:2])
    eq2 = ConstraintEquation(ddx, 0.0, cen[2:])
    F, h = stack_system([eq1, eq2], cen, k)
    assert F.shape == (3, 3)
    assert np.allclose(h, [1.0, 1.0, 0.0])
    assert np.allclose(F[:2], kernel_matrix(cen, cen[:2], k))


def test_solution_field_reproduces_interpolant():
    rng = np.random.default_rng(4)
    cen = rng.uniform(0, 1, (12, 2))
    k = RbfKernel("gaussian", 2.0)
    vals = np.sin(2 * np.pi * cen[:, 0]) * cen[:, 1]
    a = solve_linear(kernel_matrix(cen, cen, k), vals).coeffs
    f = SolutionField(cen, k, a)
    assert np.allclose(f.evaluate(cen), vals, atol=1e-8)
    assert np.allclose(evaluate(f, cen), f.evaluate(cen))


def test_solution_field_partial_matches_operator_row():
    from rbfpde import partial_matrix
    cen = np.array([[0.1, 0.2], [0.8, 0.5]])
    k = RbfKernel("gaussian", 1.0)
    f = SolutionField(cen, k, [1.0, -0.5])
    q = np.array([[0.4, 0.3]])
    want = partial_matrix(k, q, cen, (0, 1)) @ f.coeffs
    assert np.allclose(f.evaluate_partial(q, (0, 1)), want)


def test_solution_field_validation():
    k = RbfKernel("gaussian", 1.0)
    with pytest.raises(ValueError):
        SolutionField(np.zeros((3, 1)), k, [1.0, 2.0])
    f = SolutionField(np.zeros((2, 2)), k, [1.0, 2.0])
    with pytest.raises(ValueError):
        f.evaluate_partial(np.zeros((1, 3)), (1, 0))
