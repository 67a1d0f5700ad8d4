"""Radial basis functions and their closed-form partial derivatives.

Every kernel is a radial profile g applied to s = (eps*r)^2 where r is the
Euclidean distance between a query point and a center, time treated as one
more coordinate.  Derivatives with respect to the query coordinates are
available up to total order 2, which covers every second-order operator the
collocation layer assembles.
"""

import numpy as np

FAMILIES = ("gaussian", "inverse_quadratic", "multiquadric")

_SQRT2 = float(np.sqrt(2.0))


class DerivativeOrderError(NotImplementedError):
    """Requested a partial derivative beyond the closed forms (order > 2)."""


def deriv_orders(idx):
    """Normalize a DerivIndex or plain int sequence to a validated tuple."""
    orders = tuple(int(k) for k in getattr(idx, "orders", idx))
    if any(k < 0 for k in orders):
        raise ValueError("derivative orders must be non-negative: %r" % (orders,))
    if sum(orders) > 2:
        raise DerivativeOrderError(
            "total derivative order %d unsupported (closed forms stop at 2)"
            % sum(orders))
    return orders


class DerivIndex:
    """Partial-derivative multi-index, one order per point coordinate."""

    def __init__(self, orders):
        self.orders = deriv_orders(orders)

    @property
    def total(self):
        return sum(self.orders)

    def __iter__(self):
        return iter(self.orders)

    def __len__(self):
        return len(self.orders)

    def __eq__(self, other):
        return self.orders == tuple(getattr(other, "orders", other))

    def __hash__(self):
        return hash(self.orders)

    def __repr__(self):
        return "DerivIndex%r" % (self.orders,)


class RbfKernel:
    """Kernel family tag plus shape parameter epsilon."""

    def __init__(self, family, epsilon):
        family = str(family).lower()
        if family not in FAMILIES:
            raise ValueError("unknown kernel family %r (choose from %s)"
                             % (family, ", ".join(FAMILIES)))
        epsilon = float(epsilon)
        # multiquadric stays a valid (constant) basis at eps=0; the other two
        # degenerate, so they must be strictly positive
        if family == "multiquadric":
            if epsilon < 0:
                raise ValueError("epsilon must be >= 0 for multiquadric")
        elif epsilon <= 0:
            raise ValueError("epsilon must be > 0 for %s" % family)
        self.family = family
        self.epsilon = epsilon

    @property
    def sigma(self):
        """Gaussian-width parameterization: eps = 1/(sqrt(2)*sigma)."""
        return 1.0 / (_SQRT2 * self.epsilon)

    @classmethod
    def from_sigma(cls, family, sigma):
        return cls(family, 1.0 / (_SQRT2 * float(sigma)))

    def __repr__(self):
        return "RbfKernel(%r, %g)" % (self.family, self.epsilon)

    def __eq__(self, other):
        return (isinstance(other, RbfKernel) and self.family == other.family
                and self.epsilon == other.epsilon)


def _profile(family, s, order):
    """order-th derivative of the radial profile g with respect to s."""
    if family == "gaussian":
        e = np.exp(-s)
        if order == 1:
            return -e
        return e
    if family == "inverse_quadratic":
        p = 1.0 + s
        if order == 0:
            return 1.0 / p
        if order == 1:
            return -1.0 / (p * p)
        return 2.0 / (p * p * p)
    if family == "multiquadric":
        q = np.sqrt(1.0 + s)
        if order == 0:
            return q
        if order == 1:
            return 0.5 / q
        return -0.25 / (q * (1.0 + s))
    raise ValueError("unknown kernel family %r" % (family,))


def eval_radial(kernel, r):
    """psi(r), the kernel profile at radial distance r >= 0."""
    r = np.asarray(r, float)
    s = (kernel.epsilon * r) ** 2
    return _profile(kernel.family, s, 0)


def partial_matrix(kernel, queries, centers, idx):
    """Matrix of the idx-partial of every basis function at every query.

    Entry (i, k) = d^idx psi_k evaluated at queries[i], derivatives taken
    with respect to the query coordinates.  Order 0 gives the plain kernel
    matrix.  Chain rule on s = eps^2 * rho with rho the squared distance:

        d_c psi   = 2 eps^2 (q_c - c_c) g'(s)
        d_cc psi  = 4 eps^4 (q_c - c_c)^2 g''(s) + 2 eps^2 g'(s)
        d_ce psi  = 4 eps^4 (q_c - c_c)(q_e - c_e) g''(s)
    """
    orders = deriv_orders(idx)
    q = np.atleast_2d(np.asarray(queries, float))
    c = np.atleast_2d(np.asarray(centers, float))
    if q.shape[1] != c.shape[1]:
        raise ValueError("query dimension %d != center dimension %d"
                         % (q.shape[1], c.shape[1]))
    if len(orders) != q.shape[1]:
        raise ValueError("derivative index covers %d coordinates, points have %d"
                         % (len(orders), q.shape[1]))
    eps2 = kernel.epsilon ** 2
    want = [j for j, k in enumerate(orders) if k > 0]
    # accumulate the squared distance one coordinate at a time so peak memory
    # stays at a few (n_q x n_c) blocks even for large assemblies
    s = np.zeros((q.shape[0], c.shape[0]))
    diffs = {}
    for j in range(q.shape[1]):
        d = q[:, j, None] - c[None, :, j]
        if j in want:
            diffs[j] = d
        s += d * d
    s *= eps2
    total = sum(orders)
    fam = kernel.family
    if total == 0:
        return _profile(fam, s, 0)
    if total == 1:
        return (2.0 * eps2) * diffs[want[0]] * _profile(fam, s, 1)
    if len(want) == 1:
        d = diffs[want[0]]
        return ((4.0 * eps2 * eps2) * (d * d) * _profile(fam, s, 2)
                + (2.0 * eps2) * _profile(fam, s, 1))
    dj, dl = diffs[want[0]], diffs[want[1]]
    return (4.0 * eps2 * eps2) * dj * dl * _profile(fam, s, 2)


def eval_partial(kernel, idx, center, query):
    """Single-point partial derivative of psi(||query - center||)."""
    center = np.atleast_1d(np.asarray(center, float))
    query = np.atleast_1d(np.asarray(query, float))
    return float(partial_matrix(kernel, query[None, :], center[None, :], idx)[0, 0])
