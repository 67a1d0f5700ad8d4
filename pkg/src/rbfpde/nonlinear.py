"""Differentiation matrices, the four time-stepping schemes, the fully
nonlinear space-time solve, and an in-repo Levenberg-Marquardt engine."""

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve
from scipy.linalg.blas import dsyrk

from .collocation import SolutionField, kernel_matrix
from .kernels import deriv_orders, partial_matrix


class SingularBasisError(RuntimeError):
    """Kernel matrix too ill-conditioned to build differentiation matrices."""


class StepFailureError(RuntimeError):
    """An implicit time step failed to solve or converge."""


def _closest_pair(points):
    d = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((d * d).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    i, j = np.unravel_index(np.argmin(dist), dist.shape)
    return int(i), int(j), float(dist[i, j])


class DiffMatrixSet:
    """Differentiation matrices D_idx = K_idx K^{-1} on a fixed center set.

    These map nodal field values to nodal derivative values, letting
    nonlinear operators act on value vectors directly.  K is factorized once
    and cached; matrices are built on first request.
    """

    def __init__(self, centers, kernel, idxs=(), cond_limit=1e12):
        self.centers = np.atleast_2d(np.asarray(centers, float))
        self.kernel = kernel
        K = kernel_matrix(self.centers, self.centers, kernel)
        self.cond = float(np.linalg.cond(K))
        if not np.isfinite(self.cond) or self.cond > cond_limit:
            i, j, dist = _closest_pair(self.centers)
            raise SingularBasisError(
                "kernel matrix condition %.3e exceeds limit %.1e; closest "
                "centers are #%d and #%d at distance %.3e (near-duplicate basis)"
                % (self.cond, cond_limit, i, j, dist))
        # D K = K_idx  =>  K^T D^T = K_idx^T; factor K^T once
        self.kernel_inverse_factor = lu_factor(K.T)
        self._matrices = {}
        for idx in idxs:
            self.matrix(idx)

    def matrix(self, idx):
        key = deriv_orders(idx)
        if key not in self._matrices:
            B = partial_matrix(self.kernel, self.centers, self.centers, key)
            self._matrices[key] = lu_solve(self.kernel_inverse_factor, B.T).T
        return self._matrices[key]

    def values_to_coeffs(self, u):
        """Solve K a = u (used to evaluate nodal states off the centers)."""
        # K is symmetric, so the K^T factorization solves K a = u directly
        return lu_solve(self.kernel_inverse_factor, np.asarray(u, float))


def build_diff_matrix(centers, kernel, idx, cond_limit=1e12):
    """One-off D_idx = K_idx K^{-1}; use DiffMatrixSet to amortize K's factorization."""
    return DiffMatrixSet(centers, kernel, (idx,), cond_limit).matrix(idx)


class TimeScheme:
    """Time integrator descriptor; dt * steps spans the time interval."""

    VARIANTS = ("forward_euler", "imex", "backward_euler", "crank_nicolson")

    def __init__(self, variant, dt, steps):
        if variant not in self.VARIANTS:
            raise ValueError("unknown scheme %r (choose from %s)"
                             % (variant, ", ".join(self.VARIANTS)))
        if not dt > 0:
            raise ValueError("dt must be positive")
        if int(steps) < 1:
            raise ValueError("steps must be >= 1")
        self.variant = variant
        self.dt = float(dt)
        self.steps = int(steps)


class NonlinearResidualSpec:
    """Spatial operator N for u_t + N(u) = 0 in nodal-value form.

    residual(u, dms) -> N(u); jacobian(u, dms) -> dN/du (optional, finite
    differences otherwise); stiff_split = (L, explicit) with
    N(u) = L u + explicit(u, dms) for IMEX; bc = (indices, values) rows
    enforced as hard constraints each step.
    """

    def __init__(self, residual, jacobian=None, stiff_split=None, bc=None):
        self.residual = residual
        self.jacobian = jacobian
        self.stiff_split = stiff_split
        self.bc = None
        if bc is not None:
            idx, vals = bc
            self.bc = (np.asarray(idx, int), np.asarray(vals, float))


def _apply_bc(u, bc):
    if bc is not None:
        u[bc[0]] = bc[1]
    return u


def step_forward_euler(u_n, spec, dms, dt):
    """u_{n+1} = u_n - dt * N(u_n), boundary rows overwritten afterwards."""
    u = u_n - dt * spec.residual(u_n, dms)
    return _apply_bc(u, spec.bc)


def step_imex(u_n, spec, dms, dt):
    """(I + dt L) u_{n+1} = u_n - dt * explicit(u_n): stiff part implicit."""
    if spec.stiff_split is None:
        raise ValueError("imex stepping needs spec.stiff_split")
    L, explicit = spec.stiff_split
    n = u_n.shape[0]
    A = np.eye(n) + dt * np.asarray(L, float)
    b = u_n - dt * explicit(u_n, dms)
    if spec.bc is not None:
        idx, vals = spec.bc
        A[idx, :] = 0.0
        A[idx, idx] = 1.0
        b[idx] = vals
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise StepFailureError("imex implicit matrix is singular: %s" % exc)


def step_implicit(u_n, spec, dms, dt, scheme="backward_euler"):
    """Backward Euler or Crank-Nicolson step via the nonlinear engine.

    Minimizes the per-step residual (v - u_n)/dt + N(v) (backward) or its
    half-and-half average with N(u_n) (Crank-Nicolson), warm-started at u_n;
    boundary rows are replaced by hard equality constraints.
    """
    half = 0.5 if scheme == "crank_nicolson" else 1.0
    shift = 0.5 * spec.residual(u_n, dms) if half == 0.5 else 0.0
    bc = spec.bc

    def r(v):
        out = (v - u_n) / dt + half * spec.residual(v, dms) + shift
        if bc is not None:
            out[bc[0]] = v[bc[0]] - bc[1]
        return out

    jac = None
    if spec.jacobian is not None:
        eye = np.eye(u_n.shape[0])

        def jac(v):
            J = eye / dt + half * spec.jacobian(v, dms)
            if bc is not None:
                J[bc[0], :] = 0.0
                J[bc[0], bc[0]] = 1.0
            return J

    res = nlls_minimize(r, jac, u_n, max_iter=200, ftol=1e-10, xtol=1e-12)
    if not res.converged and res.cost > 1e-12 * u_n.shape[0]:
        raise StepFailureError("implicit step stalled at residual cost %.3e"
                               % res.cost)
    return res.x


def run_time_scheme(u0, spec, dms, scheme):
    """March a scheme over its steps.

    Returns (trajectory array of shape (k+1, n), diverged_at) where
    diverged_at is the 1-based index of the first non-finite step, or None.
    The trajectory keeps only the finite prefix.
    """
    u = np.asarray(u0, float).copy()
    _apply_bc(u, spec.bc)
    traj = [u.copy()]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, scheme.steps + 1):
            if scheme.variant == "forward_euler":
                u = step_forward_euler(u, spec, dms, scheme.dt)
            elif scheme.variant == "imex":
                u = step_imex(u, spec, dms, scheme.dt)
            else:
                u = step_implicit(u, spec, dms, scheme.dt, scheme.variant)
            if not np.isfinite(u).all():
                return np.array(traj), k
            traj.append(u.copy())
    return np.array(traj), None


class LmResult:
    def __init__(self, x, converged, cost, n_iter, n_fev):
        self.x = x
        self.converged = converged
        self.cost = cost
        self.n_iter = n_iter
        self.n_fev = n_fev


def nlls_minimize(residual, jacobian, x0, max_iter=200, ftol=1e-10, xtol=1e-12,
                  lam0=1e-3, use_cholesky=False):
    """Levenberg-Marquardt with adaptive damping; cost = sum of squares.

    Damping multiplies by 10 on a rejected step (up to 30 retries) and
    divides by 10 on acceptance, floored at 1e-14.  Without a Jacobian,
    forward differences with step 1e-7*max(1, |x_j|).  use_cholesky solves
    the damped normal equations through a rank-k update plus Cholesky, which
    is much faster for tall Jacobians; it falls back to raising the damping
    whenever the shifted matrix loses positive definiteness.
    """
    x = np.asarray(x0, float).copy()
    if not np.isfinite(x).all():
        raise ValueError("non-finite start point")
    r = np.asarray(residual(x), float)
    n_fev = 1
    if not np.isfinite(r).all():
        raise ValueError("residual is non-finite at the start point")
    cost = float(r @ r)
    lam = float(lam0)
    converged = False
    it = 0

    def fd_jacobian(xc, rc):
        nonlocal n_fev
        J = np.empty((rc.size, xc.size))
        for j in range(xc.size):
            h = 1e-7 * max(1.0, abs(xc[j]))
            xp = xc.copy()
            xp[j] += h
            J[:, j] = (np.asarray(residual(xp), float) - rc) / h
            n_fev += 1
        return J

    for it in range(1, max_iter + 1):
        J = jacobian(x) if jacobian is not None else fd_jacobian(x, r)
        g = J.T @ r
        if use_cholesky:
            JtJ = dsyrk(1.0, J, trans=1)
            JtJ = JtJ + np.triu(JtJ, 1).T
        else:
            JtJ = J.T @ J
        diag = np.arange(x.size)
        accepted = False
        for _ in range(31):
            A = JtJ.copy()
            A[diag, diag] += lam
            try:
                if use_cholesky:
                    dx = -cho_solve(cho_factor(A, lower=False), g)
                else:
                    dx = -np.linalg.solve(A, g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_try = x + dx
            r_try = np.asarray(residual(x_try), float)
            n_fev += 1
            c_try = float(r_try @ r_try) if np.isfinite(r_try).all() else np.inf
            if c_try < cost:
                drop = cost - c_try
                step = float(np.linalg.norm(dx))
                x, r, cost = x_try, r_try, c_try
                lam = max(lam / 10.0, 1e-14)
                accepted = True
                if drop < ftol * max(cost, 1.0) or step < xtol:
                    converged = True
                break
            lam *= 10.0
        if not accepted:
            # no step length reduces the cost: stationary to working precision
            converged = converged or cost == 0.0
            break
        if converged:
            break
    return LmResult(x, converged, cost, it, n_fev)


def solve_fully_nonlinear(residual, jacobian, centers, kernel, init=None,
                          max_iter=500, ftol=1e-10, xtol=1e-12, lam0=1e-3,
                          use_cholesky=False):
    """Minimize stacked squared residuals over the RBF coefficient vector.

    residual/jacobian act on the coefficient vector a; all constraint groups
    (PDE, IC, BC) enter as rows of the same residual.  init defaults to
    zeros.  Returns (SolutionField, LmResult); non-convergence returns the
    best-found field with diagnostics rather than raising.
    """
    centers = np.atleast_2d(np.asarray(centers, float))
    if init is None:
        init = np.zeros(centers.shape[0])
    res = nlls_minimize(residual, jacobian, init, max_iter=max_iter, ftol=ftol,
                        xtol=xtol, lam0=lam0, use_cholesky=use_cholesky)
    return SolutionField(centers, kernel, res.x), res
