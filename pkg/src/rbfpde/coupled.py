"""Coupled multi-field collocation: block assembly, direct solve, and the
fixed-point (Picard) outer iteration for field-dependent coupling weights."""

import numpy as np

from .collocation import SolutionField, operator_matrix, rhs_values, solve_linear


class CoupledEquation:
    """One stacked row block touching several unknown fields.

    blocks: {field_name: (weight, op)}; weight is a constant or a function
    of the point array, fields absent from the dict contribute zero blocks.
    """

    def __init__(self, blocks, rhs, points):
        if not blocks:
            raise ValueError("equation must touch at least one field")
        self.blocks = dict(blocks)
        self.rhs = rhs
        self.points = np.atleast_2d(np.asarray(points, float))

    def rhs_values(self):
        return rhs_values(self.rhs, self.points)


class CoupledSystemSpec:
    """fields: list of (name, kernel); every field shares the center set."""

    def __init__(self, fields, equations, centers):
        self.fields = list(fields)
        self.equations = list(equations)
        self.centers = centers

    @property
    def center_points(self):
        pts = getattr(self.centers, "points", self.centers)
        return np.atleast_2d(np.asarray(pts, float))


def assemble_coupled(spec):
    """Stack per-equation row blocks; column blocks ordered by spec.fields."""
    centers = spec.center_points
    names = [name for name, _ in spec.fields]
    kernels = dict(spec.fields)
    n = centers.shape[0]
    unknown = set().union(*(eq.blocks.keys() for eq in spec.equations)) - set(names)
    if unknown:
        raise ValueError("equations reference unknown fields: %s" % sorted(unknown))
    rows, rhs = [], []
    for eq in spec.equations:
        m = eq.points.shape[0]
        row = np.zeros((m, n * len(names)))
        for j, name in enumerate(names):
            if name not in eq.blocks:
                continue
            weight, op = eq.blocks[name]
            block = operator_matrix(op, centers, eq.points, kernels[name])
            if callable(weight):
                block = np.asarray(weight(eq.points), float).reshape(-1, 1) * block
            elif weight != 1.0:
                block = weight * block
            row[:, j * n:(j + 1) * n] = block
        rows.append(row)
        rhs.append(eq.rhs_values())
    return np.vstack(rows), np.concatenate(rhs)


def solve_coupled(spec, equilibrate=False):
    """Assemble, solve, and split coefficients into per-field SolutionFields.

    equilibrate=True rescales each equation block (rows and rhs together) by
    1/max|entry| before the solve.  Scaling a constraint by a constant keeps
    the constraint itself; it only rebalances the least-squares weighting,
    which matters when PDE rows (second derivatives, large eps) dwarf the
    value rows of ICs and BCs.
    """
    F, h = assemble_coupled(spec)
    if equilibrate:
        r0 = 0
        for eq in spec.equations:
            m = eq.points.shape[0]
            w = np.abs(F[r0:r0 + m]).max()
            if w > 0:
                F[r0:r0 + m] /= w
                h[r0:r0 + m] /= w
            r0 += m
    res = solve_linear(F, h)
    centers = spec.center_points
    n = centers.shape[0]
    return [SolutionField(centers, kern, res.coeffs[j * n:(j + 1) * n], name=name)
            for j, (name, kern) in enumerate(spec.fields)]


class PicardResult:
    def __init__(self, fields, converged, n_iter, history):
        self.fields = fields
        self.converged = converged
        self.n_iter = n_iter
        self.history = history


def _field_values(fields):
    return np.concatenate([f.evaluate(f.centers) for f in fields])


def solve_coupled_picard(builder, init, max_iter=50, tol=1e-8, residual=None):
    """Outer fixed-point iteration for field-dependent coupling weights.

    builder(fields) returns the CoupledSystemSpec linearized around the given
    iterate; each iteration re-solves it.  Convergence is the max-abs change
    of field values at the centers.  With a residual function supplied, every
    update is damped by backtracking until the nonlinear residual norm
    decreases (an undamped step that already decreases it is kept as is);
    when no step length decreases the residual the iteration has hit its
    floor and stops.

    Returns PicardResult(fields, converged, n_iter, history); non-convergence
    hands back the best iterate seen with converged=False rather than raising.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    fields = list(init)
    vals = _field_values(fields)
    r_old = None
    if residual is not None:
        r0 = np.asarray(residual(fields), float)
        r_old = float(np.linalg.norm(r0)) if np.isfinite(r0).all() else np.inf
    best, best_r = fields, r_old
    converged = False
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        new_fields = solve_coupled(builder(fields))
        if residual is None:
            step = new_fields
        else:
            step = None
            theta = 1.0
            for _ in range(31):
                cand = [SolutionField(f.centers, f.kernel,
                                      (1.0 - theta) * f.coeffs + theta * g.coeffs,
                                      name=f.name)
                        for f, g in zip(fields, new_fields)]
                r_new = np.asarray(residual(cand), float)
                rn = float(np.linalg.norm(r_new)) if np.isfinite(r_new).all() else np.inf
                if rn < r_old:
                    step, r_old = cand, rn
                    break
                theta *= 0.5
            if step is None:
                # residual cannot decrease in this direction: stationary floor
                break
        new_vals = _field_values(step)
        delta = float(np.max(np.abs(new_vals - vals)))
        fields, vals = step, new_vals
        history.append((it, delta, r_old))
        if best_r is not None and r_old < best_r:
            best, best_r = fields, r_old
        if delta < tol:
            converged = True
            break
    if residual is None or converged or best_r is None:
        best = fields
    return PicardResult(best, converged, it, history)
