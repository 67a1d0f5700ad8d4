"""Differentiation matrices, time stepping, and the least-squares engine."""

import numpy as np
import pytest

from rbfpde import (DiffMatrixSet, NonlinearResidualSpec, RbfKernel,
                    SingularBasisError, StepFailureError, TimeScheme,
                    build_diff_matrix, nlls_minimize, run_time_scheme,
                    solve_fully_nonlinear)
from rbfpde.nonlinear import step_imex


def _dm_error(n, idx, eps=3.0):
    xs = np.linspace(0.0, 2 * np.pi, n)[:, None]
    D = build_diff_matrix(xs, RbfKernel("gaussian", eps), idx, cond_limit=1e15)
    x = xs[:, 0]
    f = np.sin(x) + 0.4 * np.sin(3 * x)
    if idx == (1,):
        ref = np.cos(x) + 1.2 * np.cos(3 * x)
    else:
        ref = -np.sin(x) - 3.6 * np.sin(3 * x)
    return np.max(np.abs(D @ f - ref))


def test_diff_matrix_first_derivative_converges_under_refinement():
    errs = [_dm_error(n, (1,)) for n in (12, 24, 48)]
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < errs[0] / 10


def test_diff_matrix_second_derivative_converges_under_refinement():
    errs = [_dm_error(n, (2,)) for n in (12, 24, 48)]
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < errs[0] / 2


def test_singular_basis_raises_with_closest_pair():
    cen = np.array([[0.0], [0.0], [1.0]])
    with pytest.raises(SingularBasisError, match="closest"):
        DiffMatrixSet(cen, RbfKernel("gaussian", 1.0))


def test_diff_matrix_cache_and_preload():
    xs = np.linspace(0.0, 1.0, 8)[:, None]
    dms = DiffMatrixSet(xs, RbfKernel("gaussian", 8.0), idxs=((1,),))
    assert dms.matrix((1,)) is dms.matrix((1,))
    D2a = dms.matrix((2,))
    assert dms.matrix((2,)) is D2a


def test_values_to_coeffs_solves_kernel_system():
    from rbfpde import kernel_matrix
    xs = np.linspace(0.0, 1.0, 8)[:, None]
    k = RbfKernel("gaussian", 8.0)
    dms = DiffMatrixSet(xs, k)
    u = np.sin(xs[:, 0])
    a = dms.values_to_coeffs(u)
    assert np.allclose(kernel_matrix(xs, xs, k) @ a, u, atol=1e-9)


# ---------------------------------------------------------------------------
# Levenberg-Marquardt

def test_lm_linear_system_single_jump():
    A = np.array([[2.0, 0.0], [0.0, 3.0], [1.0, 1.0]])
    b = np.array([2.0, 6.0, 3.1])
    residual = lambda x: A @ x - b
    jacobian = lambda x: A
    want, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = nlls_minimize(residual, jacobian, np.zeros(2))
    assert res.converged
    assert np.allclose(res.x, want, atol=1e-8)
    assert res.n_iter <= 3


def _rosenbrock(x):
    return np.array([1.0 - x[0], 10.0 * (x[1] - x[0] ** 2)])


def _rosenbrock_jac(x):
    return np.array([[-1.0, 0.0], [-20.0 * x[0], 10.0]])


def test_lm_rosenbrock_analytic_jacobian():
    res = nlls_minimize(_rosenbrock, _rosenbrock_jac, np.array([-1.2, 1.0]))
    assert res.converged
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-8)
    assert res.cost < 1e-16


def test_lm_rosenbrock_finite_difference_jacobian():
    res = nlls_minimize(_rosenbrock, None, np.array([-1.2, 1.0]))
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-6)
    # FD path charges one extra residual call per parameter per iteration
    assert res.n_fev > res.n_iter


def test_lm_cholesky_path_matches_default():
    x0 = np.array([-1.2, 1.0])
    a = nlls_minimize(_rosenbrock, _rosenbrock_jac, x0)
    b = nlls_minimize(_rosenbrock, _rosenbrock_jac, x0, use_cholesky=True)
    assert np.allclose(a.x, b.x, atol=1e-8)


def test_lm_validation():
    with pytest.raises(ValueError):
        nlls_minimize(_rosenbrock, None, np.array([np.nan, 0.0]))
    bad = lambda x: np.array([np.inf])
    with pytest.raises(ValueError):
        nlls_minimize(bad, None, np.array([0.0]))


def test_lm_stationary_at_nonzero_cost_stops_cleanly():
    # residual floor of 1 everywhere; the gradient vanishes at the start
    residual = lambda x: np.array([np.sqrt(x[0] ** 2 + 1.0)])
    res = nlls_minimize(residual, None, np.array([0.0]), max_iter=50)
    assert res.cost == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(res.x, [0.0], atol=1e-6)


def test_burgers_residual_jacobian_matches_finite_differences():
    from rbfpde.problems import burgers_mol_parts
    xs, kernel, dms, spec, u_init = burgers_mol_parts()
    rng = np.random.default_rng(3)
    u = u_init + 0.05 * rng.standard_normal(u_init.size)
    J = spec.jacobian(u, dms)
    r0 = spec.residual(u, dms)
    Jfd = np.empty_like(J)
    for j in range(u.size):
        h = 1e-7 * max(1.0, abs(u[j]))
        up = u.copy()
        up[j] += h
        Jfd[:, j] = (spec.residual(up, dms) - r0) / h
    assert np.max(np.abs(J - Jfd)) <= 1e-5 * max(1.0, np.max(np.abs(J)))


# ---------------------------------------------------------------------------
# time stepping on u' = -u (residual convention: u_t + N(u) = 0)

DECAY = NonlinearResidualSpec(lambda u, d: u, lambda u, d: np.eye(u.size))


def test_scheme_validation():
    with pytest.raises(ValueError):
        TimeScheme("leapfrog", 0.1, 10)
    with pytest.raises(ValueError):
        TimeScheme("imex", 0.0, 10)
    with pytest.raises(ValueError):
        TimeScheme("imex", 0.1, 0)


def test_forward_euler_decay_oracle():
    traj, div = run_time_scheme(np.array([1.0]), DECAY, None,
                                TimeScheme("forward_euler", 0.1, 10))
    assert div is None
    assert traj.shape == (11, 1)
    assert traj[-1, 0] == pytest.approx(0.9 ** 10, rel=1e-12)


def test_backward_euler_decay_oracle():
    traj, _ = run_time_scheme(np.array([1.0]), DECAY, None,
                              TimeScheme("backward_euler", 0.1, 1))
    assert traj[-1, 0] == pytest.approx(1.0 / 1.1, rel=1e-8)


def test_crank_nicolson_decay_oracle():
    traj, _ = run_time_scheme(np.array([1.0]), DECAY, None,
                              TimeScheme("crank_nicolson", 0.1, 1))
    assert traj[-1, 0] == pytest.approx((1 - 0.05) / (1 + 0.05), rel=1e-8)


def _final_error(variant, dt, steps):
    traj, _ = run_time_scheme(np.array([1.0]), DECAY, None,
                              TimeScheme(variant, dt, steps))
    return abs(traj[-1, 0] - np.exp(-1.0))


def test_backward_euler_is_first_order():
    ratio = _final_error("backward_euler", 0.1, 10) / \
        _final_error("backward_euler", 0.05, 20)
    assert 1.5 <= ratio <= 2.5


def test_crank_nicolson_is_second_order():
    ratio = _final_error("crank_nicolson", 0.1, 10) / \
        _final_error("crank_nicolson", 0.05, 20)
    assert 3.0 <= ratio <= 5.0


def test_imex_decay_oracle():
    spec = NonlinearResidualSpec(lambda u, d: u, None,
                                 stiff_split=(np.eye(1), lambda u, d: 0.0 * u))
    traj, _ = run_time_scheme(np.array([1.0]), spec, None,
                              TimeScheme("imex", 0.1, 1))
    assert traj[-1, 0] == pytest.approx(1.0 / 1.1, rel=1e-12)


def test_imex_requires_stiff_split():
    with pytest.raises(ValueError):
        run_time_scheme(np.array([1.0]), DECAY, None,
                        TimeScheme("imex", 0.1, 1))


def test_imex_singular_matrix_raises_step_failure():
    spec = NonlinearResidualSpec(lambda u, d: u, None,
                                 stiff_split=(-np.eye(1), lambda u, d: 0.0 * u))
    with pytest.raises(StepFailureError):
        step_imex(np.array([1.0]), spec, None, 1.0)


def test_divergence_keeps_finite_prefix():
    # u' = -u^2 * (-1e300): overflows on the first growth step
    blow = NonlinearResidualSpec(lambda u, d: -u * u * 1e300, None)
    traj, div = run_time_scheme(np.array([2.0]), blow, None,
                                TimeScheme("forward_euler", 1.0, 5))
    assert div is not None
    assert traj.shape[0] == div
    assert np.isfinite(traj).all()


def test_boundary_rows_pinned():
    bc = (np.array([0]), np.array([5.0]))
    spec = NonlinearResidualSpec(lambda u, d: u, lambda u, d: np.eye(u.size),
                                 bc=bc)
    u0 = np.array([1.0, 1.0])
    for variant in ("forward_euler", "backward_euler", "crank_nicolson"):
        traj, _ = run_time_scheme(u0, spec, None, TimeScheme(variant, 0.1, 3))
        assert np.all(traj[:, 0] == 5.0)


def test_solve_fully_nonlinear_recovers_interpolant():
    from rbfpde import kernel_matrix
    xs = np.linspace(0.0, 1.0, 10)[:, None]
    k = RbfKernel("gaussian", 4.0)
    K = kernel_matrix(xs, xs, k)
    vals = np.sin(2 * np.pi * xs[:, 0])
    residual = lambda a: K @ a - vals
    jacobian = lambda a: K
    field, res = solve_fully_nonlinear(residual, jacobian, xs, k)
    assert res.converged
    assert np.allclose(field.evaluate(xs), vals, atol=1e-6)
