"""Shape-parameter search: objective pieces and grid-scan behavior."""

import numpy as np
import pytest

from rbfpde import (RbfKernel, SolutionField, TuneConfig, condition_number,
                    default_grid, eval_partial, kernel_matrix,
                    total_variation, tune_fields, tune_linear, tune_nonlinear,
                    sample_points, solve_linear)


def test_condition_number_oracles():
    assert condition_number(np.eye(4)) == pytest.approx(1.0, rel=1e-12)
    assert condition_number(np.diag(np.arange(1.0, 11.0))) == pytest.approx(
        10.0, rel=1e-12)
    assert condition_number(np.array([[1.0, 1.0], [1.0, 1.0]])) == np.inf
    with pytest.raises(ValueError):
        condition_number(np.zeros((0, 0)))


def test_total_variation_constant_field_is_zero():
    # multiquadric at eps=0 is the constant basis, so the field is flat
    k = RbfKernel("multiquadric", 0.0)
    cen = np.array([[0.1, 0.1], [0.8, 0.4]])
    f = SolutionField(cen, k, [1.0, 2.0])
    pts = np.random.default_rng(0).uniform(0, 1, (30, 2))
    assert total_variation(f, pts) == pytest.approx(0.0, abs=1e-20)


def test_total_variation_single_center_hand_value():
    k = RbfKernel("gaussian", 1.5)
    cen = np.array([[0.3, 0.4]])
    f = SolutionField(cen, k, [2.0])
    pts = np.array([[0.1, 0.2], [0.5, 0.9], [0.3, 0.4]])
    acc = sum((2.0 * eval_partial(k, (1, 0), cen[0], p)) ** 2
              + (2.0 * eval_partial(k, (0, 1), cen[0], p)) ** 2 for p in pts)
    assert total_variation(f, pts) == pytest.approx(acc / 3.0, rel=1e-10)


def test_total_variation_quadratic_in_coefficients():
    k = RbfKernel("gaussian", 2.0)
    cen = np.random.default_rng(1).uniform(0, 1, (5, 2))
    pts = np.random.default_rng(2).uniform(0, 1, (11, 2))
    a = np.random.default_rng(3).standard_normal(5)
    tv1 = total_variation(SolutionField(cen, k, a), pts)
    tv2 = total_variation(SolutionField(cen, k, 2 * a), pts)
    assert tv2 == pytest.approx(4.0 * tv1, rel=1e-10)


def test_total_variation_uses_collocation_volume():
    k = RbfKernel("gaussian", 1.0)
    cen = np.array([[0.5, 0.5]])
    f = SolutionField(cen, k, [1.0])
    cs = sample_points([(0.0, 2.0), (0.0, 3.0)], (4, 4))
    raw = total_variation(f, cs.points)  # unit volume
    boxed = total_variation(f, cs)
    assert boxed == pytest.approx(6.0 * raw, rel=1e-12)


def test_tune_config_validation():
    with pytest.raises(ValueError):
        TuneConfig(grid=[])
    with pytest.raises(ValueError):
        TuneConfig(grid=[1.0, -2.0])
    with pytest.raises(ValueError):
        TuneConfig(weights=(-1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        TuneConfig(weights=(1.0, 1.0, 0.5))  # data term without data
    cfg = TuneConfig(data=(np.zeros((2, 1)), np.zeros(2)))
    assert cfg.weights == (1e-12, 1.0, 1.0)
    assert TuneConfig().weights == (1e-12, 1.0, 0.0)


def test_default_grid_spacing():
    g = default_grid()
    assert g[0] == pytest.approx(1e-2) and g[-1] == pytest.approx(1e2)
    assert g.size == 65
    assert np.allclose(np.diff(np.log10(g)), 1.0 / 16, atol=1e-12)


def _interp_problem():
    cen = np.linspace(0.0, 1.0, 9)[:, None]
    vals = np.sin(2 * np.pi * cen[:, 0])

    def problem(eps):
        k = RbfKernel("gaussian", eps)
        K = kernel_matrix(cen, cen, k)
        return K, vals, cen, k, cen

    return cen, vals, problem


def test_tune_linear_argmin_matches_hand_scoring():
    cen, vals, problem = _interp_problem()
    w = (1e-12, 1.0, 0.0)
    cfg = TuneConfig(grid=[0.5, 2.0, 8.0], weights=w)
    eps_star, trace = tune_linear(problem, cfg)
    assert len(trace) == 3
    scores = []
    for entry in trace:
        F, h, centers, kernel, pts = problem(entry.epsilon)
        field = SolutionField(centers, kernel, solve_linear(F, h).coeffs)
        want = w[0] * condition_number(F) + w[1] * total_variation(field, pts)
        assert entry.objective == pytest.approx(want, rel=1e-9)
        scores.append(want)
    assert eps_star == trace[int(np.argmin(scores))].epsilon
    assert sum(e.selected for e in trace) == 1


def test_tune_linear_is_deterministic():
    _, _, problem = _interp_problem()
    cfg = TuneConfig(grid=[0.5, 2.0, 8.0], weights=(1e-12, 1.0, 0.0))
    assert tune_linear(problem, cfg) == tune_linear(problem, cfg)


def test_tune_linear_tie_prefers_smaller_epsilon():
    cen, vals, _ = _interp_problem()

    def flat(eps):  # candidate value is ignored: all scores tie
        k = RbfKernel("gaussian", 1.0)
        return kernel_matrix(cen, cen, k), vals, cen, k, cen

    eps_star, trace = tune_linear(flat, TuneConfig(grid=[4.0, 1.0, 2.0],
                                                   weights=(0.0, 1.0, 0.0)))
    assert eps_star == 1.0
    assert [e.epsilon for e in trace] == [1.0, 2.0, 4.0]
    assert [e.selected for e in trace] == [True, False, False]


def test_tune_linear_failures_stay_in_trace():
    _, _, problem = _interp_problem()

    def sometimes(eps):
        if eps > 1.5:
            raise RuntimeError("assembly blew up")
        return problem(eps)

    eps_star, trace = tune_linear(sometimes, TuneConfig(
        grid=[0.5, 2.0], weights=(0.0, 1.0, 0.0)))
    assert eps_star == 0.5
    assert trace[1].objective == np.inf
    assert not trace[1].selected


def test_tune_linear_data_term():
    cen, vals, problem = _interp_problem()
    data = (cen, vals)
    cfg = TuneConfig(grid=[0.5, 2.0, 8.0], weights=(0.0, 0.0, 1.0), data=data)
    eps_star, trace = tune_linear(problem, cfg)
    # interpolation reproduces its own samples, so scores are near machine zero
    assert all(e.objective < 1e-12 for e in trace)
    assert eps_star in cfg.grid


def test_tune_nonlinear_scores_solver_cost():
    cen = np.linspace(0.0, 1.0, 5)[:, None]
    k0 = RbfKernel("gaussian", 1.0)

    def problem(eps):
        field = SolutionField(cen, k0, np.zeros(5))
        return field, (eps - 3.0) ** 2, cen

    grid = [1.0, 2.9, 3.1, 7.0]
    eps_star, trace = tune_nonlinear(problem, TuneConfig(
        grid=grid, weights=(1.0, 0.0, 0.0)))
    assert eps_star == 2.9
    assert [e.epsilon for e in trace] == sorted(grid)


def test_tune_fields_sweeps_each_grid():
    from rbfpde import CoupledEquation, CoupledSystemSpec, LinearOperatorSpec
    cen = np.linspace(0.0, 1.0, 7)[:, None]
    ident = LinearOperatorSpec.identity(1)
    u_vals = np.sin(2 * np.pi * cen[:, 0])
    v_vals = np.cos(2 * np.pi * cen[:, 0])

    def problem(eps_vec):
        eqs = [CoupledEquation({"u": (1.0, ident)}, u_vals, cen),
               CoupledEquation({"v": (1.0, ident)}, v_vals, cen)]
        spec = CoupledSystemSpec(
            [("u", RbfKernel("gaussian", eps_vec[0])),
             ("v", RbfKernel("gaussian", eps_vec[1]))], eqs, cen)
        return spec, cen

    grids = [np.array([2.0, 6.0]), np.array([3.0, 9.0])]
    eps_vec, trace = tune_fields(problem, grids, sweeps=1)
    assert len(eps_vec) == 2
    assert eps_vec[0] in grids[0] and eps_vec[1] in grids[1]
    # one sweep scores every candidate of both grids
    assert len(trace) == 4
    assert all(np.isfinite(obj) for _, obj in trace)
