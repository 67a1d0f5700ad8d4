"""Shape-parameter auto-tuning by grid search.

Linear objective: w1*cond(F) + w2*TV(u_hat); nonlinear objective adds the
solver's residual cost and an optional ground-truth data term.
"""

from collections import namedtuple

import numpy as np

from .collocation import SolutionField, evaluate, solve_linear
from .coupled import assemble_coupled, solve_coupled
from .kernels import deriv_orders, partial_matrix


def default_grid(lo=1e-2, hi=1e2, per_decade=16):
    """Log-spaced candidates, 16 per decade over [1e-2, 1e2] by default."""
    decades = np.log10(hi) - np.log10(lo)
    n = int(round(decades * per_decade)) + 1
    return np.logspace(np.log10(lo), np.log10(hi), n)


class TuneConfig:
    """Candidate grid plus objective weights (w1 cond, w2 TV, w3 data).

    data is an optional (points, values) pair of ground-truth samples; the
    w3 term is only legal when it is present.  Default weights put the
    condition term at 1e-12 so cond ~ 1e10+ and TV land on the same scale.
    """

    def __init__(self, grid=None, weights=None, data=None):
        self.grid = default_grid() if grid is None else np.asarray(grid, float)
        if self.grid.size == 0:
            raise ValueError("candidate grid is empty")
        if not (self.grid > 0).all():
            raise ValueError("all candidate epsilons must be positive")
        self.data = data
        if weights is None:
            weights = (1e-12, 1.0, 1.0 if data is not None else 0.0)
        w1, w2, w3 = (float(w) for w in weights)
        if min(w1, w2, w3) < 0:
            raise ValueError("weights must be non-negative")
        if w3 > 0 and data is None:
            raise ValueError("data term weighted but no ground-truth samples given")
        self.weights = (w1, w2, w3)


def condition_number(M):
    """sigma_max / sigma_min; inf when the smallest singular value underflows."""
    M = np.atleast_2d(np.asarray(M, float))
    if M.size == 0:
        raise ValueError("empty matrix")
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] < 1e-300:
        return np.inf
    return float(sv[0] / sv[-1])


def total_variation(field, points):
    """(vol(D)/N) * sum_i ||grad u_hat(x_i)||^2 over all d+1 coordinates."""
    pts = points.points if hasattr(points, "points") else np.atleast_2d(points)
    vol = points.volume if hasattr(points, "volume") else 1.0
    dim = pts.shape[1]
    acc = np.zeros(pts.shape[0])
    for j in range(dim):
        idx = deriv_orders(tuple(1 if k == j else 0 for k in range(dim)))
        g = partial_matrix(field.kernel, pts, field.centers, idx) @ field.coeffs
        acc += g * g
    return float(vol / pts.shape[0] * acc.sum())


TuneEntry = namedtuple(
    "TuneEntry", "epsilon objective cond tv data_loss selected")


def _data_loss(fields, data):
    if data is None:
        return 0.0
    pts, vals = data
    vals = np.asarray(vals, float)
    if not isinstance(fields, (list, tuple)):
        fields = [fields]
        vals = [vals]
    total = 0.0
    for f, v in zip(fields, vals):
        d = evaluate(f, pts) - np.asarray(v, float)
        total += float(d @ d)
    return total


def _finish(entries):
    idx = 0
    for i, e in enumerate(entries):
        if e.objective < entries[idx].objective:
            idx = i  # strict < keeps the smaller epsilon on ties
    out = [e._replace(selected=(i == idx)) for i, e in enumerate(entries)]
    return out[idx].epsilon, out


def tune_linear(problem, cfg):
    """Grid-search epsilon for a linear Kansa problem.

    problem(eps) -> (F, h, centers, kernel, tv_points).  Each candidate is
    assembled, solved, and scored w1*cond(F) + w2*TV + w3*data; failures
    score infinity rather than vanishing from the trace.  Returns
    (eps_star, trace) with ties broken toward smaller epsilon.
    """
    w1, w2, w3 = cfg.weights
    entries = []
    for eps in np.sort(cfg.grid):
        try:
            F, h, centers, kernel, tv_points = problem(eps)
            cond = condition_number(F) if w1 > 0 else 0.0
            field = SolutionField(centers, kernel, solve_linear(F, h).coeffs)
            tv = total_variation(field, tv_points)
            dl = _data_loss(field, cfg.data) if w3 > 0 else 0.0
            obj = w1 * cond + w2 * tv + w3 * dl
        except Exception:
            cond = tv = dl = obj = np.inf
        entries.append(TuneEntry(float(eps), float(obj), float(cond),
                                 float(tv), float(dl), False))
    return _finish(entries)


def tune_nonlinear(problem, cfg):
    """Grid-search epsilon for a nonlinear solve.

    problem(eps) -> (field, residual_cost, tv_points) where residual_cost
    is the solver's final sum of squared residuals.  Score is
    w1*cost + w2*TV + w3*data.
    """
    w1, w2, w3 = cfg.weights
    entries = []
    for eps in np.sort(cfg.grid):
        try:
            field, cost, tv_points = problem(eps)
            tv = total_variation(field, tv_points) if w2 > 0 else 0.0
            dl = _data_loss(field, cfg.data) if w3 > 0 else 0.0
            obj = w1 * float(cost) + w2 * tv + w3 * dl
            cost = float(cost)
        except Exception:
            cost = tv = dl = obj = np.inf
        entries.append(TuneEntry(float(eps), float(obj), float(cost),
                                 float(tv), float(dl), False))
    return _finish(entries)


def tune_fields(problem, grids, weights=(1e-12, 1.0, 0.0), data=None,
                init=None, sweeps=2):
    """Coordinate-descent tuning of one epsilon per field.

    problem(eps_vec) -> (spec, tv_points) with spec a CoupledSystemSpec;
    each sweep re-tunes field j's epsilon over grids[j] while the others
    hold their current best.  Returns (eps_vec, trace).
    """
    n = len(grids)
    eps = list(init) if init is not None else [float(g[len(g) // 2]) for g in grids]
    w1, w2, w3 = weights
    trace = []
    for _ in range(sweeps):
        for j in range(n):
            best_obj, best_eps = np.inf, eps[j]
            for cand in np.sort(np.asarray(grids[j], float)):
                trial = list(eps)
                trial[j] = float(cand)
                try:
                    spec, tv_points = problem(trial)
                    F, h = assemble_coupled(spec)
                    cond = condition_number(F) if w1 > 0 else 0.0
                    fields = solve_coupled(spec)
                    tv = sum(total_variation(f, tv_points) for f in fields)
                    dl = _data_loss(fields, data) if w3 > 0 else 0.0
                    obj = w1 * cond + w2 * tv + w3 * dl
                except Exception:
                    cond = tv = dl = obj = np.inf
                trace.append((tuple(trial), float(obj)))
                if obj < best_obj:
                    best_obj, best_eps = obj, float(cand)
            eps[j] = best_eps
    return eps, trace
