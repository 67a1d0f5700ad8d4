"""Inverse parameter estimation: recover scalar PDE parameters from solution
observations by gradient-free minimization of a sum-of-squares discrepancy.

Two searchers are provided: Nelder-Mead (default for dim >= 2) and a
Powell-style coordinate descent built on golden-section line searches.  The
problem-specific drivers wrap fast cached forwards so a full search stays in
the tens of seconds.
"""

import time
import warnings

import numpy as np

from .collocation import kernel_matrix, sample_points, solve_linear
from .kernels import RbfKernel, partial_matrix
from .nonlinear import TimeScheme, nlls_minimize, run_time_scheme
from .problems import (advection_exact, advection_setup, burgers_exact_steady,
                       burgers_fn_system, burgers_mol_parts, burgers_setup,
                       lotka_volterra_setup, lv_reference, _sin_ic,
                       _test_grid)


class NonIdentifiableWarning(UserWarning):
    """Loss surface flat along some parameter direction at the optimum."""


class InverseProblem:
    """forward maps a parameter vector to predictions at the observation
    points; loss is the squared discrepancy summed over observations."""

    LOSSES = ("sum_squares",)

    def __init__(self, forward, observations, init, loss="sum_squares",
                 bounds=None):
        if loss not in self.LOSSES:
            raise ValueError("unknown loss %r" % (loss,))
        points, values = observations
        values = np.asarray(values, float)
        if len(points) != len(values):
            raise ValueError("observation points/values length mismatch: "
                             "%d vs %d" % (len(points), len(values)))
        init = np.atleast_1d(np.asarray(init, float))
        if not np.isfinite(init).all():
            raise ValueError("initial parameter vector must be finite")
        if bounds is not None and len(bounds) != init.size:
            raise ValueError("need one (lo, hi) pair per parameter")
        self.forward = forward
        self.observations = (points, values)
        self.loss = loss
        self.init = init
        self.bounds = bounds

    def loss_at(self, params):
        params = np.atleast_1d(np.asarray(params, float))
        if self.bounds is not None:
            for v, (lo, hi) in zip(params, self.bounds):
                if (lo is not None and v < lo) or (hi is not None and v > hi):
                    return np.inf
        try:
            pred = self.forward(params)
        except (FloatingPointError, np.linalg.LinAlgError, RuntimeError,
                ValueError):
            return np.inf
        if pred is None:
            return np.inf
        pred = np.asarray(pred, float)
        if not np.isfinite(pred).all():
            return np.inf
        return float(np.sum((pred - self.observations[1]) ** 2))


class _Tracker:
    """Wraps a loss callable: counts evaluations, keeps the best point, and
    records the non-increasing best-so-far sequence."""

    def __init__(self, fn, history=None):
        self.fn = fn
        self.n_fev = 0
        self.best_x = None
        self.best_f = np.inf
        self.history = history

    def __call__(self, x):
        f = self.fn(x)
        self.n_fev += 1
        if f < self.best_f:
            self.best_f = f
            self.best_x = np.array(x, float, copy=True)
        if self.history is not None:
            self.history.append(self.best_f)
        return f


class NelderMead:
    """Downhill simplex with standard reflect/expand/contract/shrink moves.

    The initial simplex offsets each coordinate by step * |x_j| (step itself
    when the coordinate is zero).  Stops when both the function spread and
    the simplex diameter fall under the tolerances.
    """

    def __init__(self, step=0.5, ftol=1e-12, xtol=1e-10, max_fev=2000):
        self.step = step
        self.ftol = ftol
        self.xtol = xtol
        self.max_fev = max_fev

    def minimize(self, f, x0):
        x0 = np.asarray(x0, float)
        n = x0.size
        sim = [x0.copy()]
        for j in range(n):
            p = x0.copy()
            p[j] += self.step * abs(p[j]) if p[j] != 0 else self.step
            sim.append(p)
        sim = np.array(sim)
        fv = np.array([f(p) for p in sim])
        nfev = n + 1
        while nfev < self.max_fev:
            o = np.argsort(fv)
            sim, fv = sim[o], fv[o]
            if (np.abs(fv[-1] - fv[0]) <= self.ftol * max(1e-30, abs(fv[0]))
                    and np.max(np.abs(sim[1:] - sim[0])) <= self.xtol):
                break
            c = sim[:-1].mean(axis=0)
            xr = c + (c - sim[-1])
            fr = f(xr)
            nfev += 1
            if fr < fv[0]:
                xe = c + 2 * (c - sim[-1])
                fe = f(xe)
                nfev += 1
                sim[-1], fv[-1] = (xe, fe) if fe < fr else (xr, fr)
            elif fr < fv[-2]:
                sim[-1], fv[-1] = xr, fr
            else:
                xc = c + 0.5 * (sim[-1] - c)
                fc = f(xc)
                nfev += 1
                if fc < fv[-1]:
                    sim[-1], fv[-1] = xc, fc
                else:
                    for i in range(1, n + 1):
                        sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                        fv[i] = f(sim[i])
                        nfev += 1
        o = np.argsort(fv)
        return sim[o][0], fv[o][0], nfev


_GR = (np.sqrt(5) - 1) / 2


def golden_section(f, a, b, tol):
    """Golden-section minimum of f on [a, b] to relative interval width tol."""
    c = b - _GR * (b - a)
    d = a + _GR * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while abs(b - a) > tol * (abs(a) + abs(b) + 1e-12) and n < 80:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GR * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GR * (b - a)
            fd = f(d)
        n += 1
    return (c, fc) if fc < fd else (d, fd)


class CoordinateLineSearch:
    """Powell-style coordinate descent: bracket each coordinate by doubling
    steps away from the current point, then refine with golden sections.

    h0 overrides the initial bracket step (default 0.4 |x_j|, or 0.1 at
    zero); tol is the golden-section relative width.
    """

    def __init__(self, max_cycles=20, ftol=1e-10, tol=1e-4, h0=None,
                 max_fev=10000):
        self.max_cycles = max_cycles
        self.ftol = ftol
        self.tol = tol
        self.h0 = h0
        self.max_fev = max_fev

    def _line(self, f, x, j, fx):
        def fj(t):
            p = x.copy()
            p[j] = t
            return f(p)

        t0 = x[j]
        h = self.h0 if self.h0 is not None else \
            (0.4 * abs(t0) if t0 != 0 else 0.1)
        f_minus, f_plus = fj(t0 - h), fj(t0 + h)
        if fx <= f_minus and fx <= f_plus:
            a, b = t0 - h, t0 + h
        else:
            s, fs = (h, f_plus) if f_plus < f_minus else (-h, f_minus)
            prev, t, ft = t0, t0 + s, fs
            while True:
                s *= 2
                nt = t + s
                fnt = fj(nt)
                if not np.isfinite(fnt) or fnt >= ft:
                    a, b = min(prev, nt), max(prev, nt)
                    break
                prev, t, ft = t, nt, fnt
                if abs(s) > 1e3 * (abs(t0) + 1.0):
                    a, b = min(prev, nt), max(prev, nt)
                    break
        tb, ftb = golden_section(fj, a, b, self.tol)
        if ftb < fx:
            return tb, ftb
        return x[j], fx

    def minimize(self, f, x0):
        track = f if isinstance(f, _Tracker) else _Tracker(f)
        x = np.asarray(x0, float).copy()
        fx = track(x)
        for _ in range(self.max_cycles):
            f_start = fx
            for j in range(x.size):
                if track.n_fev >= self.max_fev:
                    break
                x[j], fx = self._line(track, x, j, fx)
            if (f_start - fx <= self.ftol * max(1e-30, abs(f_start))
                    or track.n_fev >= self.max_fev):
                break
        return x, fx, track.n_fev


def infer(problem, opts=None):
    """Minimize the observation discrepancy; returns (params, loss, n_fev).

    opts: method ("nelder_mead" or "coordinate"), max_fev, xtol, ftol, step,
    tol, h0, max_cycles, history (a list collecting the best-so-far losses).
    Trial points where the forward solver fails score +inf and the search
    continues.
    """
    opts = dict(opts or {})
    method = opts.pop("method", None)
    if method is None:
        method = "nelder_mead" if problem.init.size >= 2 else "coordinate"
    history = opts.pop("history", None)
    track = _Tracker(problem.loss_at, history)
    if method in ("nelder_mead", "NelderMead"):
        allowed = ("step", "ftol", "xtol", "max_fev")
        nm = NelderMead(**{k: opts[k] for k in allowed if k in opts})
        x, fx, _ = nm.minimize(track, problem.init)
    elif method in ("coordinate", "CoordinateLineSearch"):
        allowed = ("max_cycles", "ftol", "tol", "h0", "max_fev")
        cls_ = CoordinateLineSearch(
            **{k: opts[k] for k in allowed if k in opts})
        x, fx, _ = cls_.minimize(track, problem.init)
    else:
        raise ValueError("unknown method %r" % (method,))
    if track.best_f < fx:
        x, fx = track.best_x, track.best_f
    return np.atleast_1d(x), float(fx), track.n_fev


# ---------------------------------------------------------------------------
# advection: transport speed from interior observations

def advection_beta_problem(setup=None, c_scale=1, init=0.2):
    """Cached-block forward: only the PDE rows depend on the trial speed, so
    each candidate costs one least-squares solve."""
    setup = setup or advection_setup()
    from .problems import scale_factor
    s = scale_factor(c_scale)
    nx, nt = setup.counts["n_domain"]
    colloc = sample_points(setup.box, (nx * s, nt * s),
                           setup.counts["n_initial"],
                           setup.counts["n_boundary"])
    kernel = RbfKernel(setup.params["family"], setup.params["epsilon"])
    u0 = setup.params.get("u0", _sin_ic)
    beta_true = setup.params["beta"]
    centers = colloc.points
    dom = colloc.subset("domain")
    ic = colloc.subset("initial")
    bc = colloc.subset("boundary")
    Ft = partial_matrix(kernel, dom, centers, (0, 1))
    Fx = partial_matrix(kernel, dom, centers, (1, 0))
    K_ic = kernel_matrix(centers, ic, kernel)
    K_bc = kernel_matrix(centers, bc, kernel)
    h = np.concatenate([np.zeros(len(dom)), u0(ic[:, 0]),
                        advection_exact(bc[:, 0], bc[:, 1], beta_true, u0)])
    _, _, Q = _test_grid(setup.box, setup.n_test)
    K_obs = kernel_matrix(centers, Q, kernel)
    obs = advection_exact(Q[:, 0], Q[:, 1], beta_true, u0)

    def forward(params):
        beta = float(params[0])
        F = np.vstack([Ft + beta * Fx, K_ic, K_bc])
        return K_obs @ solve_linear(F, h).coeffs

    return InverseProblem(forward, (Q, obs), init)


def infer_advection_beta(setup=None, c_scale=1, init=0.2, opts=None):
    problem = advection_beta_problem(setup, c_scale, init)
    o = dict(method="coordinate", max_cycles=1, tol=1e-3)
    o.update(opts or {})
    params, loss, n_fev = infer(problem, o)
    return float(params[0]), loss, n_fev


# ---------------------------------------------------------------------------
# predator-prey: all four rate constants from trajectory observations

def lv_forward_operator(setup=None, c_scale=1, newton_iter=30, tol=1e-8):
    """(times, forward): forward(params) -> (N, 2) predictions at the center
    times, via trajectory-predictor initialization and damped Newton."""
    setup = setup or lotka_volterra_setup()
    from .problems import scale_factor
    s = scale_factor(c_scale)
    p = setup.params
    x0, y0 = p["x0"], p["y0"]
    colloc = sample_points(setup.box, (setup.counts["n_domain"][0] * s,),
                           n_initial=setup.counts["n_initial"])
    tc = colloc.points[:, 0]
    n = tc.size
    tr = colloc.subset("domain")[:, 0]
    t0 = np.array([[setup.box[0][0]]])
    kx = RbfKernel(p["family"], p["eps_x"])
    ky = RbfKernel(p["family"], p["eps_y"])
    cen = colloc.points
    trq = tr[:, None]
    Kx_r = kernel_matrix(cen, trq, kx)
    Ky_r = kernel_matrix(cen, trq, ky)
    Kxt_r = partial_matrix(kx, trq, cen, (1,))
    Kyt_r = partial_matrix(ky, trq, cen, (1,))
    Kx_ic = kernel_matrix(cen, t0, kx)
    Ky_ic = kernel_matrix(cen, t0, ky)
    Kx_c = kernel_matrix(cen, cen, kx)
    Ky_c = kernel_matrix(cen, cen, ky)
    order = np.argsort(tc)

    def residual(ab, params):
        a_, b_, d_, g_ = params
        ax, ay = ab[:n], ab[n:]
        xr, yr = Kx_r @ ax, Ky_r @ ay
        rx = Kxt_r @ ax - a_ * xr + b_ * xr * yr
        ry = Kyt_r @ ay + g_ * yr - d_ * xr * yr
        return np.concatenate([rx, Kx_ic @ ax - x0, ry, Ky_ic @ ay - y0])

    def forward(params):
        a_, b_, d_, g_ = (float(v) for v in params)
        try:
            ref = lv_reference(params, x0, y0, tc[order], hmax=0.05)
            xv, yv = np.empty(n), np.empty(n)
            xv[order], yv[order] = ref[:, 0], ref[:, 1]
        except RuntimeError:
            xv, yv = np.full(n, x0), np.full(n, y0)
        ax = solve_linear(Kx_c, xv).coeffs
        ay = solve_linear(Ky_c, yv).coeffs
        ab = np.concatenate([ax, ay])
        r = residual(ab, params)
        if not np.isfinite(r).all():
            return None
        rnorm = np.linalg.norm(r)
        for _ in range(newton_iter):
            ax, ay = ab[:n], ab[n:]
            xr, yr = Kx_r @ ax, Ky_r @ ay
            Fxx = Kxt_r + (-a_ + b_ * yr)[:, None] * Kx_r
            Fxy = (b_ * xr)[:, None] * Ky_r
            Fyx = (-d_ * yr)[:, None] * Kx_r
            Fyy = Kyt_r + (g_ - d_ * xr)[:, None] * Ky_r
            F = np.block([[Fxx, Fxy], [Kx_ic, np.zeros((1, n))],
                          [Fyx, Fyy], [np.zeros((1, n)), Ky_ic]])
            h = np.concatenate([b_ * xr * yr, [x0], -d_ * xr * yr, [y0]])
            try:
                ab_new = solve_linear(F, h).coeffs
            except (np.linalg.LinAlgError, ValueError):
                break
            step = ab_new - ab
            theta, accepted = 1.0, False
            for _ in range(30):
                cand = ab + theta * step
                r = residual(cand, params)
                rn = np.linalg.norm(r) if np.isfinite(r).all() else np.inf
                if rn < rnorm:
                    accepted = True
                    break
                theta /= 2
            if not accepted:
                break
            v_old = np.concatenate([Kx_c @ ab[:n], Ky_c @ ab[n:]])
            ab, rnorm = cand, rn
            v_new = np.concatenate([Kx_c @ ab[:n], Ky_c @ ab[n:]])
            if np.abs(v_new - v_old).max() < tol:
                break
        return np.column_stack([Kx_c @ ab[:n], Ky_c @ ab[n:]])

    return tc, forward


LV_STAGES = ((20.0, 0.5, 400), (35.0, 0.25, 300), (70.0, 0.15, 300),
             (120.0, 0.08, 250), (200.0, 0.04, 250))
LV_RAY_SCALES = (1.0, 0.5, 0.25, 0.12, 0.06, 0.03)


def lv_rate_fit(setup=None, observations=None, c_scale=1):
    """Direct rate estimate by gradient matching.

    Both dynamics equations are linear in the four rate constants once the
    species values and their time-derivatives are known, so fitting each
    species' RBF interpolant to the observations and matching its derivative
    on the interior times reduces the problem to two small least-squares
    solves.  observations are (N, 2) values in collocation-point order; exact
    dense data gives estimates good to a fraction of a percent.
    """
    setup = setup or lotka_volterra_setup()
    from .problems import scale_factor
    s = scale_factor(c_scale)
    p = setup.params
    colloc = sample_points(setup.box, (setup.counts["n_domain"][0] * s,),
                           n_initial=setup.counts["n_initial"])
    obs = np.asarray(observations, float)
    if obs.shape != (len(colloc), 2):
        raise ValueError("observations must cover both species at all "
                         "%d collocation times" % len(colloc))
    cen = colloc.points
    kx = RbfKernel(p["family"], p["eps_x"])
    ky = RbfKernel(p["family"], p["eps_y"])
    ax = solve_linear(kernel_matrix(cen, cen, kx), obs[:, 0]).coeffs
    ay = solve_linear(kernel_matrix(cen, cen, ky), obs[:, 1]).coeffs
    tr = colloc.subset("domain")
    xv = kernel_matrix(cen, tr, kx) @ ax
    yv = kernel_matrix(cen, tr, ky) @ ay
    xd = partial_matrix(kx, tr, cen, (1,)) @ ax
    yd = partial_matrix(ky, tr, cen, (1,)) @ ay
    ab = solve_linear(np.column_stack([xv, -xv * yv]), xd).coeffs
    dg = solve_linear(np.column_stack([xv * yv, -yv]), yd).coeffs
    return np.array([ab[0], ab[1], dg[0], dg[1]])


def _hessian_proxy_directions(params):
    """Coordinate axes plus the two rate-pair scaling directions, which stay
    on the equilibrium manifold and are where degeneracy hides."""
    n = len(params)
    dirs = [np.eye(n)[j] * max(abs(params[j]), 1e-3) for j in range(n)]
    if n == 4:
        a, b, d, g = params
        dirs.append(np.array([a, b, 0.0, 0.0]))
        dirs.append(np.array([0.0, 0.0, d, g]))
    return dirs


def check_identifiability(loss, params, rel_step=1e-3, threshold=1e-12):
    """Raw second differences of the loss along probe directions; a value
    below the threshold means the observations do not pin that direction."""
    params = np.asarray(params, float)
    f0 = loss(params)
    curvatures = []
    for v in _hessian_proxy_directions(params):
        h = rel_step * v
        if not np.any(h):
            continue
        c = loss(params + h) + loss(params - h) - 2 * f0
        curvatures.append(c)
    flat = min(curvatures) < threshold if curvatures else False
    if flat:
        warnings.warn("loss surface is flat along some parameter direction "
                      "(second difference < %g); the observations do not "
                      "identify the parameters uniquely" % threshold,
                      NonIdentifiableWarning, stacklevel=2)
    return flat, curvatures


def infer_lotka_volterra(setup=None, observations=None, init=(1.0, 1.0, 1.0, 1.0),
                         stages=LV_STAGES, details=False):
    """Recover all four rate constants from trajectory observations.

    A gradient-matching fit of the observations supplies the search start
    whenever it yields a positive, finite parameter vector with finite loss;
    a full-horizon Nelder-Mead then polishes it.  Degenerate data falls back
    to observation-horizon continuation: a coarse log-scale ray scan picks
    the starting magnitude on a 20-time-unit prefix, then Nelder-Mead
    re-solves on progressively longer horizons with shrinking simplex steps.
    Observations default to the reference-parameter trajectory at the center
    times (both species).
    """
    setup = setup or lotka_volterra_setup()
    p = setup.params
    init = np.asarray(init, float)
    if not np.isfinite(init).all():
        raise ValueError("initial parameter vector must be finite")
    t_start = time.perf_counter()
    tc, forward = lv_forward_operator(setup)
    if observations is None:
        truth = (p["alpha"], p["beta"], p["delta"], p["gamma"])
        order = np.argsort(tc)
        ref = lv_reference(truth, p["x0"], p["y0"], tc[order])
        obs = np.empty((tc.size, 2))
        obs[order] = ref
    else:
        t_obs, obs = observations
        obs = np.asarray(obs, float)
        if obs.shape != (tc.size, 2):
            raise ValueError("observations must cover both species at all "
                             "%d center times" % tc.size)
    n_fev = [0]

    def make_loss(horizon):
        mask = tc <= horizon + 1e-9

        def L(params):
            if np.any(np.asarray(params) <= 0):
                return np.inf
            n_fev[0] += 1
            pred = forward(params)
            if pred is None or not np.isfinite(pred).all():
                return np.inf
            return float(np.sum((pred[mask] - obs[mask]) ** 2))

        return L

    horizon_full = setup.box[0][1]
    loss_full = make_loss(horizon_full)
    f_init = loss_full(init)
    if f_init <= 1e-10:
        # already model-consistent; nothing to search for
        x, fx = init.copy(), f_init
    else:
        try:
            guess = lv_rate_fit(setup, obs)
        except (ValueError, np.linalg.LinAlgError):
            guess = None
        f_guess = np.inf
        if guess is not None and np.isfinite(guess).all() \
                and (guess > 0).all():
            f_guess = loss_full(guess)
        if np.isfinite(f_guess):
            nm = NelderMead(step=0.05, ftol=1e-12, xtol=1e-10, max_fev=300)
            x, fx, _ = nm.minimize(loss_full, guess)
        else:
            prefix = make_loss(stages[0][0])
            ray = [prefix(s * init) for s in LV_RAY_SCALES]
            x = LV_RAY_SCALES[int(np.argmin(ray))] * init
            fx = np.inf
            for horizon, step, max_fev in stages:
                L = make_loss(horizon)
                nm = NelderMead(step=step, ftol=1e-12, xtol=1e-10,
                                max_fev=max_fev)
                x, fx, _ = nm.minimize(L, x)
    flat, curvatures = check_identifiability(loss_full, x)
    wall = time.perf_counter() - t_start
    if details:
        return x, dict(loss=float(fx), n_fev=n_fev[0], wall_time_s=wall,
                       non_identifiable=flat, curvatures=curvatures)
    return x


# ---------------------------------------------------------------------------
# Burgers viscosity from trajectory observations

def infer_burgers_nu(scheme="crank_nicolson", setup=None, observations=None,
                     init=0.1, steps=16, opts=None, details=False):
    """Recover the viscosity driving a time-stepping or space-time forward.

    scheme: a TimeScheme variant name or "fully_nonlinear".  Observations
    default to the closed-form solution of the setup's true viscosity,
    sampled where the forward predicts (step times for the marchers, the
    collocation centers for the space-time solve).  Initial and boundary
    data always come from the observed solution; only the interior dynamics
    carry the trial viscosity.
    """
    setup = setup or burgers_setup()
    p = setup.params
    (x0b, xfb), (t0b, tfb) = setup.box
    t_start = time.perf_counter()
    if scheme == "fully_nonlinear":
        parts = burgers_fn_system(setup)
        cen = parts["centers"]
        Kc = kernel_matrix(cen, cen, parts["kernel"])
        if observations is None:
            obs = burgers_exact_steady(cen[:, 0], cen[:, 1], p["nu"],
                                       p["u_left"], p["u_right"])
        else:
            obs = np.asarray(observations[1], float)
        a0 = solve_linear(Kc, burgers_exact_steady(
            cen[:, 0], t0b, p["nu"], p["u_left"], p["u_right"])).coeffs
        cache = {}

        def forward(params):
            nu = float(params[0])
            if cache:
                key = min(cache, key=lambda k: abs(k - nu))
                start = cache[key]
            else:
                start = a0
            res_fn, jac_fn = parts["make"](nu)
            res = nlls_minimize(res_fn, jac_fn, start, max_iter=500,
                                ftol=1e-9, use_cholesky=True)
            cache[nu] = res.x.copy()
            return Kc @ res.x

        problem = InverseProblem(forward, (cen, obs), init,
                                 bounds=[(1e-12, None)])
        o = dict(method="coordinate", max_cycles=1, tol=2e-3, h0=0.1)
    else:
        xs, kernel, dms, _, u_init = burgers_mol_parts(setup)
        dt = (tfb - t0b) / steps
        t_steps = t0b + dt * np.arange(steps + 1)
        if observations is None:
            obs = np.array([burgers_exact_steady(xs[:, 0], t, p["nu"],
                                                 p["u_left"], p["u_right"])
                            for t in t_steps])
        else:
            obs = np.asarray(observations[1], float)

        def forward(params):
            nu = float(params[0])
            _, _, _, spec, _ = burgers_mol_parts(setup, nu=nu, dms=dms)
            traj, diverged_at = run_time_scheme(
                u_init, spec, dms, TimeScheme(scheme, dt, steps))
            if diverged_at is not None:
                return None
            return traj

        problem = InverseProblem(forward, (t_steps, obs), init,
                                 bounds=[(1e-12, None)])
        o = dict(method="coordinate", max_cycles=1, tol=1e-4, h0=0.04)
    o.update(opts or {})
    params, loss, n_fev = infer(problem, o)
    nu_hat = float(params[0])
    if details:
        return nu_hat, dict(loss=loss, n_fev=n_fev,
                            wall_time_s=time.perf_counter() - t_start)
    return nu_hat
