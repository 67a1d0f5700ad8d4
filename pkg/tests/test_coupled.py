import numpy as np
import pytest

from rbfpde import (CoupledEquation, CoupledSystemSpec, LinearOperatorSpec,
                    RbfKernel, kernel_matrix, solve_coupled,
                    solve_coupled_picard, solve_linear, SolutionField)
from rbfpde.coupled import assemble_coupled

IDENT = LinearOperatorSpec.identity(2)


def _centers(n=6, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, (n, 2))


def test_assemble_block_layout():
    cen = _centers(4)
    ku = RbfKernel("gaussian", 1.5)
    kv = RbfKernel("gaussian", 2.5)
    eq = CoupledEquation({"u": (2.0, IDENT), "v": (-1.0, IDENT)}, 0.0, cen[:3])
    spec = CoupledSystemSpec([("u", ku), ("v", kv)], [eq], cen)
    F, h = assemble_coupled(spec)
    assert F.shape == (3, 8)
    assert np.allclose(F[:, :4], 2.0 * kernel_matrix(cen, cen[:3], ku))
    assert np.allclose(F[:, 4:], -kernel_matrix(cen, cen[:3], kv))
    assert np.allclose(h, 0.0)


def test_assemble_absent_field_is_zero_block():
    cen = _centers(3)
    k = RbfKernel("gaussian", 1.0)
    eq = CoupledEquation({"v": (1.0, IDENT)}, 1.0, cen)
    spec = CoupledSystemSpec([("u", k), ("v", k)], [eq], cen)
    F, _ = assemble_coupled(spec)
    assert np.all(F[:, :3] == 0.0)
    assert np.any(F[:, 3:] != 0.0)


def test_assemble_callable_weight_scales_rows_pointwise():
    cen = _centers(5)
    k = RbfKernel("gaussian", 1.2)
    w = lambda pts: pts[:, 0]
    eq = CoupledEquation({"u": (w, IDENT)}, 0.0, cen)
    spec = CoupledSystemSpec([("u", k)], [eq], cen)
    F, _ = assemble_coupled(spec)
    assert np.allclose(F, cen[:, 0][:, None] * kernel_matrix(cen, cen, k))


def test_assemble_unknown_field_rejected():
    cen = _centers(3)
    k = RbfKernel("gaussian", 1.0)
    eq = CoupledEquation({"w": (1.0, IDENT)}, 0.0, cen)
    spec = CoupledSystemSpec([("u", k)], [eq], cen)
    with pytest.raises(ValueError):
        assemble_coupled(spec)


def test_equation_needs_blocks():
    with pytest.raises(ValueError):
        CoupledEquation({}, 0.0, np.zeros((1, 2)))


def test_solve_coupled_recovers_manufactured_fields():
    cen = _centers(8, seed=3)
    ku = RbfKernel("gaussian", 2.0)
    kv = RbfKernel("gaussian", 1.4)
    rng = np.random.default_rng(7)
    au, av = rng.standard_normal(8), rng.standard_normal(8)
    u_vals = kernel_matrix(cen, cen, ku) @ au
    v_vals = kernel_matrix(cen, cen, kv) @ av
    eqs = [CoupledEquation({"u": (1.0, IDENT)}, u_vals, cen),
           CoupledEquation({"v": (1.0, IDENT)}, v_vals, cen),
           CoupledEquation({"u": (1.0, IDENT), "v": (1.0, IDENT)},
                           u_vals + v_vals, cen)]
    spec = CoupledSystemSpec([("u", ku), ("v", kv)], eqs, cen)
    u, v = solve_coupled(spec)
    assert u.name == "u" and v.name == "v"
    q = rng.uniform(0.1, 0.9, (20, 2))
    assert np.allclose(u.evaluate(q), SolutionField(cen, ku, au).evaluate(q),
                       atol=1e-7)
    assert np.allclose(v.evaluate(q), SolutionField(cen, kv, av).evaluate(q),
                       atol=1e-7)


def test_equilibration_keeps_consistent_solution():
    cen = _centers(6, seed=5)
    k = RbfKernel("gaussian", 1.8)
    vals = np.cos(2 * np.pi * cen[:, 1])
    eqs = [CoupledEquation({"u": (1.0, IDENT)}, vals, cen)]
    spec = CoupledSystemSpec([("u", k)], eqs, cen)
    plain = solve_coupled(spec, equilibrate=False)[0]
    scaled = solve_coupled(spec, equilibrate=True)[0]
    q = _centers(15, seed=9)
    assert np.allclose(plain.evaluate(q), scaled.evaluate(q), atol=1e-6)


def _contraction_builder(cen, k, rate=0.5, offset=1.0):
    """Fixed point of u = rate*u + offset is offset / (1 - rate)."""

    def build(fields):
        prev = fields[0]
        rhs = lambda pts: rate * prev.evaluate(pts) + offset
        eq = CoupledEquation({"u": (1.0, IDENT)}, rhs, cen)
        return CoupledSystemSpec([("u", k)], [eq], cen)

    return build


def test_picard_converges_on_contraction():
    cen = _centers(5, seed=1)
    k = RbfKernel("gaussian", 1.0)
    init = [SolutionField(cen, k, np.zeros(5), name="u")]
    res = solve_coupled_picard(_contraction_builder(cen, k), init, tol=1e-10)
    assert res.converged
    assert res.n_iter < 50
    assert np.allclose(res.fields[0].evaluate(cen), 2.0, atol=1e-8)
    deltas = [d for _, d, _ in res.history]
    assert deltas[-1] < deltas[0]


def test_picard_residual_damping_tracks_decrease():
    cen = _centers(5, seed=2)
    k = RbfKernel("gaussian", 1.0)
    init = [SolutionField(cen, k, np.zeros(5), name="u")]
    residual = lambda fields: fields[0].evaluate(cen) - 2.0
    res = solve_coupled_picard(_contraction_builder(cen, k), init,
                               tol=1e-10, residual=residual)
    assert res.converged
    rnorms = [r for _, _, r in res.history]
    assert all(b <= a for a, b in zip(rnorms, rnorms[1:]))


def test_picard_nonconvergence_reports_flag():
    cen = _centers(4, seed=6)
    k = RbfKernel("gaussian", 1.0)
    init = [SolutionField(cen, k, np.zeros(4), name="u")]
    slow = _contraction_builder(cen, k, rate=0.99, offset=0.01)
    res = solve_coupled_picard(slow, init, max_iter=3, tol=1e-12)
    assert not res.converged
    assert res.n_iter == 3
    assert len(res.fields) == 1


def test_picard_validation():
    cen = _centers(3)
    k = RbfKernel("gaussian", 1.0)
    init = [SolutionField(cen, k, np.zeros(3))]
    with pytest.raises(ValueError):
        solve_coupled_picard(_contraction_builder(cen, k), init, max_iter=0)
    with pytest.raises(ValueError):
        solve_coupled_picard(_contraction_builder(cen, k), init, tol=0.0)
