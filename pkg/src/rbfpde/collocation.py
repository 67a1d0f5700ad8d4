"""Linear mesh-free collocation: point sampling, operator assembly,
least-squares solve, and solution evaluation.

The unknown field is expanded in RBFs centered at the collocation points;
each constraint equation contributes one stacked block of rows, and the
coefficient vector comes out of a single (generally rectangular)
least-squares solve.
"""

import numpy as np
from scipy.linalg import lstsq

from .kernels import partial_matrix


def interior_grid(n, lo, hi):
    """n uniform points strictly inside [lo, hi]: lo + (hi-lo)*k/(n+1)."""
    k = np.arange(1, n + 1, dtype=float)
    return lo + (hi - lo) * k / (n + 1)


class CollocationSet:
    """Points in R^{d+1} with a group label per point.

    Labels are "domain", "initial", or "boundary:<i>" for the i-th spatial
    coordinate's faces.  The box metadata (one (lo, hi) pair per coordinate)
    feeds domain-volume computations downstream.
    """

    def __init__(self, points, labels, box=None):
        self.points = np.atleast_2d(np.asarray(points, float))
        self.labels = np.asarray(labels, dtype=object)
        if self.labels.shape[0] != self.points.shape[0]:
            raise ValueError("label count %d != point count %d"
                             % (self.labels.shape[0], self.points.shape[0]))
        self.box = None if box is None else tuple(
            (float(lo), float(hi)) for lo, hi in box)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def subset(self, label):
        """Points whose label equals `label` or starts with `label:`."""
        mask = np.array([lab == label or str(lab).startswith(label + ":")
                         for lab in self.labels], dtype=bool)
        return self.points[mask]

    @property
    def volume(self):
        if self.box is None:
            raise ValueError("collocation set carries no box metadata")
        return float(np.prod([hi - lo for lo, hi in self.box]))


def sample_points(box, n_domain, n_initial=0, n_boundary=0, inclusive=False):
    """Uniformly sample a space-time box into a CollocationSet.

    box: one (lo, hi) pair per coordinate, time last.  n_domain: interior
    grid count per coordinate (int for a 1-D box).  n_initial: points on the
    t = t0 slice, endpoints included.  n_boundary: times per spatial face.
    With inclusive=True the domain grid and boundary times include their
    endpoints instead of using the interior offsets.

    Boundary/initial sampling supports one spatial dimension (all the
    benchmark problems); higher-dimensional boxes still get domain grids.
    """
    box = [(float(lo), float(hi)) for lo, hi in box]
    for lo, hi in box:
        if not hi > lo:
            raise ValueError("degenerate box: [%g, %g]" % (lo, hi))
    dim = len(box)
    if np.ndim(n_domain) == 0:
        n_domain = (int(n_domain),)
    if len(n_domain) != dim:
        raise ValueError("n_domain needs one count per coordinate")

    def axis_points(n, lo, hi):
        if inclusive:
            return np.linspace(lo, hi, n)
        return interior_grid(n, lo, hi)

    axes = [axis_points(int(n), lo, hi) for n, (lo, hi) in zip(n_domain, box)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = [np.column_stack([m.ravel() for m in mesh])]
    labels = [np.full(pts[0].shape[0], "domain", dtype=object)]

    t0, tf = box[-1]
    if n_initial:
        if dim == 1:
            if int(n_initial) != 1:
                raise ValueError("a time-only box has a single initial point")
            ic = np.array([[t0]])
        elif dim == 2:
            xs = np.linspace(box[0][0], box[0][1], int(n_initial))
            ic = np.column_stack([xs, np.full(xs.shape, t0)])
        else:
            raise ValueError("initial-slice sampling supports <= 1 spatial dim")
        pts.append(ic)
        labels.append(np.full(ic.shape[0], "initial", dtype=object))
    if n_boundary:
        if dim != 2:
            raise ValueError("boundary sampling supports exactly 1 spatial dim")
        ts = (np.linspace(t0, tf, int(n_boundary)) if inclusive
              else interior_grid(int(n_boundary), t0, tf))
        for face in box[0]:
            bc = np.column_stack([np.full(ts.shape, face), ts])
            pts.append(bc)
            labels.append(np.full(bc.shape[0], "boundary:0", dtype=object))
    return CollocationSet(np.vstack(pts), np.concatenate(labels), box=box)


class LinearOperatorSpec:
    """Linear differential operator: a sum of (coefficient, deriv-index)
    terms, coefficients either constants or functions of the point array."""

    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise ValueError("operator needs at least one term")
        self.terms = terms

    @classmethod
    def identity(cls, dim):
        return cls([(1.0, (0,) * dim)])


def rhs_values(rhs, points):
    """Evaluate an equation right-hand side: callable, scalar, or vector."""
    points = np.atleast_2d(np.asarray(points, float))
    if callable(rhs):
        h = np.asarray(rhs(points), float)
    else:
        h = np.asarray(rhs, float)
        if h.ndim == 0:
            h = np.full(points.shape[0], float(h))
    h = h.reshape(-1)
    if h.shape[0] != points.shape[0]:
        raise ValueError("rhs produced %d values for %d points"
                         % (h.shape[0], points.shape[0]))
    return h


class ConstraintEquation:
    """One constraint block: (op applied to the field)(x) = rhs(x) on points."""

    def __init__(self, op, rhs, points):
        self.op = op
        self.rhs = rhs
        self.points = np.atleast_2d(np.asarray(points, float))

    def rhs_values(self):
        return rhs_values(self.rhs, self.points)


def kernel_matrix(centers, queries, kernel):
    """Entry (i, k) = psi_k(||query_i - center_k||)."""
    c = np.atleast_2d(np.asarray(centers, float))
    if c.shape[0] == 0:
        raise ValueError("centers must be non-empty")
    return partial_matrix(kernel, queries, c, (0,) * c.shape[1])


def operator_matrix(op, centers, queries, kernel):
    """Entry (i, k) = sum over terms of coeff(query_i) * d^idx psi_k(query_i)."""
    q = np.atleast_2d(np.asarray(queries, float))
    out = None
    for coeff, idx in op.terms:
        block = partial_matrix(kernel, q, centers, idx)
        if callable(coeff):
            block = np.asarray(coeff(q), float).reshape(-1, 1) * block
        elif coeff != 1.0:
            block = coeff * block
        out = block if out is None else out + block
    return out


def stack_system(equations, centers, kernel):
    """Vertically stack each equation's operator block and rhs, in order."""
    equations = list(equations)
    if not equations:
        raise ValueError("need at least one constraint equation")
    blocks, rhs = [], []
    for eq in equations:
        blocks.append(operator_matrix(eq.op, centers, eq.points, kernel))
        rhs.append(eq.rhs_values())
    return np.vstack(blocks), np.concatenate(rhs)


class SolveResult:
    """Coefficients plus rank/conditioning metadata from a solve."""

    def __init__(self, coeffs, rank, cond=None, warnings=()):
        self.coeffs = coeffs
        self.rank = rank
        self.cond = cond
        self.warnings = list(warnings)


def solve_linear(F, h):
    """Minimum-norm least squares for F a = h.

    Column-pivoted QR with complete orthogonal factorization does the work,
    truncating at the default relative cutoff; a numerically rank-deficient
    system therefore already yields the pseudo-inverse solution, and the
    result carries a conditioning warning with a lower-bound estimate
    implied by the cutoff.
    """
    F = np.asarray(F, float)
    h = np.asarray(h, float).reshape(-1)
    if F.ndim != 2 or F.shape[0] != h.shape[0]:
        raise ValueError("system shape mismatch: F %r, h length %d"
                         % (F.shape, h.shape[0]))
    if F.shape[0] < F.shape[1]:
        raise ValueError("underdetermined system: %d rows < %d columns"
                         % (F.shape[0], F.shape[1]))
    if not (np.isfinite(F).all() and np.isfinite(h).all()):
        raise ValueError("non-finite entries in the linear system")
    a, _, rank, _ = lstsq(F, h, lapack_driver="gelsy")
    if rank < F.shape[1]:
        cond = 1.0 / (np.finfo(float).eps * max(F.shape))
        warn = ("rank-deficient system: rank %d < %d columns, "
                "cond estimate >= %.3e" % (rank, F.shape[1], cond))
        return SolveResult(a, int(rank), float(cond), [warn])
    return SolveResult(a, int(rank), None, [])


class SolutionField:
    """RBF expansion: centers, kernel, and the solved coefficient vector."""

    def __init__(self, centers, kernel, coeffs, name=None):
        self.centers = np.atleast_2d(np.asarray(centers, float))
        self.kernel = kernel
        self.coeffs = np.asarray(coeffs, float).reshape(-1)
        if self.coeffs.shape[0] != self.centers.shape[0]:
            raise ValueError("coefficient count %d != center count %d"
                             % (self.coeffs.shape[0], self.centers.shape[0]))
        self.name = name

    def evaluate(self, queries):
        return evaluate(self, queries)

    def evaluate_partial(self, queries, idx):
        q = np.atleast_2d(np.asarray(queries, float))
        if q.shape[1] != self.centers.shape[1]:
            raise ValueError("query dimension %d != center dimension %d"
                             % (q.shape[1], self.centers.shape[1]))
        return partial_matrix(self.kernel, q, self.centers, idx) @ self.coeffs


def evaluate(field, queries):
    """Field values at query points: kernel_matrix(centers, queries) @ coeffs."""
    q = np.atleast_2d(np.asarray(queries, float))
    if q.shape[1] != field.centers.shape[1]:
        raise ValueError("query dimension %d != center dimension %d"
                         % (q.shape[1], field.centers.shape[1]))
    return kernel_matrix(field.centers, q, field.kernel) @ field.coeffs
