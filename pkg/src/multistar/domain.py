"""Reference geometry on the closed unit ball.

Provides the quadrature grid, the smooth radial cutoff partition chi/chibar,
and a global polynomial field representation with exact (coefficient-level)
differential operators:

    rectangular   d_i
    angular       ang_ij = x_i d_j - x_j d_i      (degree preserving)
    radial        rad    = x_i d_i  = r d/dr      (diagonal on monomials)

Because the operators act exactly on coefficients, all commutator identities
between them hold to rounding error on any represented field.  Fields sampled
at grid nodes are projected into the basis by weighted least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .errors import ConfigurationError, DomainError

AXES = (1, 2, 3)
ANGULAR_PAIRS = ((1, 2), (1, 3), (2, 3))


# ----------------------------------------------------------------- cutoff

def _bump(u):
    """exp(-1/u) for u > 0, else 0; the standard C-infinity mollifier piece."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smoothstep(u):
    """C-infinity monotone step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    a = _bump(u)
    b = _bump(1.0 - u)
    return a / (a + b)


def chi(r):
    """Radial cutoff: 0 on [0, 1/4], 1 on [3/4, 1], smooth monotone between."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > 1 + 1e-12):
        raise DomainError("chi: radius outside [0, 1]")
    return smoothstep((r - 0.25) / 0.5)


def chibar(r):
    """Conjugate cutoff 1 - chi; the pair is an exact partition of unity."""
    return 1.0 - chi(r)


# ----------------------------------------------------------------- grid

@dataclass(frozen=True)
class ReferenceGrid:
    """Quadrature nodes and weights on the closed unit ball.

    Product of a Gauss-Legendre radial rule on [0, 1] (with the r^2 volume
    factor folded into the weights) and a Gauss-Legendre-in-cos(theta) x
    uniform-in-phi sphere rule.  Monomials of total degree <= exact_degree
    are integrated exactly.
    """

    nodes: np.ndarray            # (n, 3)
    weights: np.ndarray          # (n,)
    radial_shells: int
    angular_points: int          # actual points per shell
    chi_values: np.ndarray
    chibar_values: np.ndarray
    boundary_distance: np.ndarray  # 1 - |x| per node
    radii: np.ndarray
    exact_degree: int
    n_theta: int
    n_phi: int

    @property
    def n_nodes(self):
        return self.nodes.shape[0]


def _sphere_rule(angular_points):
    """Gauss product rule on the unit sphere with >= angular_points nodes.

    Gauss-Legendre in cos(theta) times uniform (half-offset) phi with
    n_phi ~ 2 n_theta, the balance at which the exact harmonic degree
    min(2 n_theta - 1, n_phi - 1) is largest per node.  The realised count
    n_theta * n_phi may slightly exceed the request and is reported in the
    grid.  A uniform-phi rule needs n_phi > 2m to keep azimuthal order m
    alias-free, which BallBasis checks against its degree.
    """
    a = int(angular_points)
    n_theta = max(int(np.ceil(np.sqrt(a / 2.0))), 2)
    n_phi = max(int(np.ceil(a / n_theta)), 3)
    ct, wt = np.polynomial.legendre.leggauss(n_theta)   # cos(theta) in (-1, 1)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    st = np.sqrt(1.0 - ct**2)
    dirs = np.stack([
        np.outer(st, np.cos(phi)).ravel(),
        np.outer(st, np.sin(phi)).ravel(),
        np.outer(ct, np.ones(n_phi)).ravel(),
    ], axis=1)
    w = (2.0 * np.pi / n_phi) * np.repeat(wt, n_phi)
    harmonic_degree = min(2 * n_theta - 1, n_phi - 1)
    return dirs, w, harmonic_degree, n_theta, n_phi


def build_grid(radial_shells, angular_points):
    """Assemble the reference quadrature grid.

    radial_shells >= 2 Gauss-Legendre levels in r, angular_points >= 6 nodes
    per shell.  Weights sum to the ball volume 4*pi/3 to rounding.
    """
    if radial_shells < 2:
        raise ConfigurationError("radial_shells must be >= 2")
    if angular_points < 6:
        raise ConfigurationError("angular_points must be >= 6")
    xr, wr = np.polynomial.legendre.leggauss(radial_shells)
    r = 0.5 * (xr + 1.0)
    wr = 0.5 * wr * r**2                      # fold in the r^2 volume factor
    dirs, wa, ang_degree, n_theta, n_phi = _sphere_rule(angular_points)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    weights = (wr[:, None] * wa[None, :]).ravel()
    radii = np.repeat(r, dirs.shape[0])
    # radial GL with the r^2 factor is exact for r^k, k + 2 <= 2*radial_shells - 1
    exact_degree = min(2 * radial_shells - 3, ang_degree)
    return ReferenceGrid(
        nodes=nodes,
        weights=weights,
        radial_shells=radial_shells,
        angular_points=dirs.shape[0],
        chi_values=chi(radii),
        chibar_values=chibar(radii),
        boundary_distance=1.0 - radii,
        radii=radii,
        exact_degree=exact_degree,
        n_theta=n_theta,
        n_phi=n_phi,
    )


def integrate(grid, values):
    """Fixed-order weighted sum over grid nodes."""
    return float(np.dot(grid.weights, values))


# ----------------------------------------------------------------- basis

def monomial_exponents(degree):
    """All (a, b, c) with a+b+c <= degree, graded lexicographic."""
    exps = []
    for d in range(degree + 1):
        block = set()
        for combo in combinations_with_replacement(range(3), d):
            e = [0, 0, 0]
            for i in combo:
                e[i] += 1
            block.add(tuple(e))
        exps.extend(sorted(block, reverse=True))
    return np.array(exps, dtype=np.int64).reshape(-1, 3)


def _vandermonde(exps, pts):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    V = np.ones((pts.shape[0], exps.shape[0]))
    maxdeg = int(exps.max()) if exps.size else 0
    pows = [np.ones((pts.shape[0], 3))]
    for _ in range(maxdeg):
        pows.append(pows[-1] * pts)
    for k, (a, b, c) in enumerate(exps):
        V[:, k] = pows[a][:, 0] * pows[b][:, 1] * pows[c][:, 2]
    return V


class BallBasis:
    """Monomial basis of total degree <= degree with exact derivative matrices.

    Coefficient vectors are indexed by `exps`.  Differentiation (rectangular,
    angular, radial) and multiplication by x_i act as sparse-in-spirit dense
    matrices assembled once.  Node evaluation uses the cached Vandermonde of
    the grid; fitting solves the quadrature-weighted least squares problem
    through a precomputed QR factorisation.
    """

    def __init__(self, grid, degree=6, derivative_order_cap=4):
        self.grid = grid
        self.degree = int(degree)
        # uniform-phi rules alias azimuthal orders m and m - n_phi; degree-P
        # monomials are only identifiable from node values when n_phi > 2P
        # and the theta rule resolves P+1 latitudes
        if grid.n_phi < 2 * self.degree + 1 or grid.n_theta < self.degree + 1:
            raise ConfigurationError(
                f"grid angular resolution (n_theta={grid.n_theta}, n_phi={grid.n_phi}) "
                f"cannot identify degree-{self.degree} fields; need n_theta >= "
                f"{self.degree + 1}, n_phi >= {2 * self.degree + 1}")
        if grid.radial_shells < self.degree + 1:
            raise ConfigurationError(
                f"need at least degree+1={self.degree + 1} radial shells for degree-"
                f"{self.degree} fields")
        self.derivative_order_cap = int(derivative_order_cap)
        self.exps = monomial_exponents(self.degree)
        self.n = self.exps.shape[0]
        self._index = {tuple(e): k for k, e in enumerate(self.exps)}
        self.V = _vandermonde(self.exps, grid.nodes)
        sw = np.sqrt(grid.weights)
        self._Q, self._R = np.linalg.qr(sw[:, None] * self.V)
        self._sw = sw
        self.D = [self._diff_matrix(i) for i in range(3)]
        self.MUL = [self._mul_matrix(i) for i in range(3)]
        self.ANG = {}
        for (i, j) in ANGULAR_PAIRS:
            a, b = i - 1, j - 1
            self.ANG[(i, j)] = self.MUL[a] @ self.D[b] - self.MUL[b] @ self.D[a]
        self.RAD = np.diag(self.exps.sum(axis=1).astype(float))

    # -- operator assembly

    def _diff_matrix(self, axis):
        M = np.zeros((self.n, self.n))
        for k, e in enumerate(self.exps):
            if e[axis] > 0:
                tgt = list(e)
                tgt[axis] -= 1
                M[self._index[tuple(tgt)], k] = e[axis]
        return M

    def _mul_matrix(self, axis):
        # multiplication by x_axis; exact on inputs of degree < P, the
        # would-be degree P+1 image of top-degree monomials is dropped
        M = np.zeros((self.n, self.n))
        for k, e in enumerate(self.exps):
            tgt = list(e)
            tgt[axis] += 1
            key = tuple(tgt)
            if key in self._index:
                M[self._index[key], k] = 1.0
        return M

    # -- fit / evaluate

    def fit(self, values):
        """Project node samples onto the basis (weighted least squares).

        values: (n_nodes,) for a scalar field or (k, n_nodes) for k components.
        """
        values = np.asarray(values, dtype=float)
        stacked = values[None, :] if values.ndim == 1 else values
        rhs = self._Q.T @ (self._sw[:, None] * stacked.T)
        coef = np.linalg.solve(self._R, rhs)
        return coef[:, 0] if values.ndim == 1 else coef.T

    def eval(self, coeffs, pts=None):
        """Evaluate coefficient vector(s) at grid nodes or arbitrary points."""
        coeffs = np.asarray(coeffs, dtype=float)
        V = self.V if pts is None else _vandermonde(self.exps, pts)
        out = V @ (coeffs.T if coeffs.ndim > 1 else coeffs)
        return out.T if coeffs.ndim > 1 else out


@dataclass
class FieldRep:
    """Scalar or 3-vector polynomial field: coefficients in a BallBasis.

    coeffs has shape (n,) for scalars or (3, n) for vectors.
    """

    basis: BallBasis
    coeffs: np.ndarray

    @classmethod
    def from_nodes(cls, basis, values):
        return cls(basis, basis.fit(np.asarray(values, dtype=float)))

    @classmethod
    def from_callable(cls, basis, fn):
        return cls.from_nodes(basis, fn(basis.grid.nodes))

    @property
    def is_vector(self):
        return self.coeffs.ndim == 2

    def values(self, pts=None):
        return self.basis.eval(self.coeffs, pts)

    def _apply(self, M):
        c = self.coeffs
        return FieldRep(self.basis, (M @ c.T).T if self.is_vector else M @ c)

    def component(self, i):
        return FieldRep(self.basis, self.coeffs[i])


# ----------------------------------------------------------------- operators

def rect_partial(F, axis):
    """Single rectangular derivative d_axis, axis in {1,2,3}."""
    if axis not in AXES:
        raise DomainError("axis must be in {1,2,3}")
    return F._apply(F.basis.D[axis - 1])


def angular_derivative(F, i, j):
    """ang_ij = x_i d_j - x_j d_i, exact and degree preserving."""
    if i == j:
        raise DomainError("angular derivative needs two distinct axes")
    if i not in AXES or j not in AXES:
        raise DomainError("axes must be in {1,2,3}")
    if (i, j) in ANGULAR_PAIRS:
        return F._apply(F.basis.ANG[(i, j)])
    return F._apply(-F.basis.ANG[(j, i)])


def radial_derivative(F):
    """rad = x_i d_i = r d/dr; diagonal (total degree) on monomials."""
    return F._apply(F.basis.RAD)


def mixed_operator_matrix(basis, m, n):
    """Matrix of rad^m ang12^n1 ang13^n2 ang23^n3 (rightmost factor first)."""
    n1, n2, n3 = n
    if m + n1 + n2 + n3 > basis.derivative_order_cap:
        raise ConfigurationError(
            f"derivative order {m + n1 + n2 + n3} above cap {basis.derivative_order_cap}")
    M = np.eye(basis.n)
    for _ in range(n3):
        M = basis.ANG[(2, 3)] @ M
    for _ in range(n2):
        M = basis.ANG[(1, 3)] @ M
    for _ in range(n1):
        M = basis.ANG[(1, 2)] @ M
    for _ in range(m):
        M = basis.RAD @ M
    return M


def mixed_derivative(F, m, n):
    """Composite radial/angular derivative of orders (m, n=(n1,n2,n3))."""
    return F._apply(mixed_operator_matrix(F.basis, m, tuple(n)))


def rect_operator_matrix(basis, k):
    """Matrix of d1^k1 d2^k2 d3^k3."""
    k1, k2, k3 = k
    if k1 + k2 + k3 > basis.derivative_order_cap:
        raise ConfigurationError(
            f"derivative order {k1 + k2 + k3} above cap {basis.derivative_order_cap}")
    M = np.eye(basis.n)
    for axis, reps in ((0, k1), (1, k2), (2, k3)):
        for _ in range(reps):
            M = basis.D[axis] @ M
    return M


def rect_derivative(F, k):
    """Rectangular multi-derivative of multi-order k = (k1,k2,k3)."""
    return F._apply(rect_operator_matrix(F.basis, tuple(k)))


def multi_orders(order):
    """All (m, (n1,n2,n3)) with m + n1+n2+n3 <= order."""
    out = []
    for m in range(order + 1):
        for n1 in range(order - m + 1):
            for n2 in range(order - m - n1 + 1):
                for n3 in range(order - m - n1 - n2 + 1):
                    out.append((m, (n1, n2, n3)))
    return out


def rect_orders(order):
    """All (k1,k2,k3) with k1+k2+k3 <= order."""
    out = []
    for k1 in range(order + 1):
        for k2 in range(order - k1 + 1):
            for k3 in range(order - k1 - k2 + 1):
                out.append((k1, k2, k3))
    return out


def decompose_rect_residual(F, i, r_min):
    """Check d_i = (x_j/r^2) ang_ji + (x_i/r^2) rad away from the origin.

    Returns the max absolute residual over grid nodes with r >= r_min.
    Degenerate at the origin, hence r_min > 0 is required.
    """
    if r_min <= 0:
        raise DomainError("r_min must be positive; decomposition degenerates at the origin")
    basis = F.basis
    grid = basis.grid
    mask = grid.radii >= r_min
    if not np.any(mask):
        raise DomainError("no grid nodes in the requested region")
    x = grid.nodes[mask]
    r2 = np.sum(x**2, axis=1)
    lhs = rect_partial(F, i).values()[..., mask]
    rad_vals = radial_derivative(F).values()[..., mask]
    acc = (x[:, i - 1] / r2) * rad_vals
    for j in AXES:
        if j == i:
            continue
        acc = acc + (x[:, j - 1] / r2) * angular_derivative(F, j, i).values()[..., mask]
    return float(np.max(np.abs(lhs - acc)))


# ------------------------------------------------- symbolic rectangular expansion

class PolyCoef(dict):
    """Tiny polynomial-coefficient helper: {(a,b,c): value}."""

    def __mul__(self, other):
        out = PolyCoef()
        for e1, c1 in self.items():
            for e2, c2 in other.items():
                key = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                out[key] = out.get(key, 0.0) + c1 * c2
        return out

    def diff(self, axis):
        out = PolyCoef()
        for e, c in self.items():
            if e[axis] > 0:
                f = list(e)
                f[axis] -= 1
                out[tuple(f)] = out.get(tuple(f), 0.0) + c * e[axis]
        return out

    def eval(self, pts):
        vals = np.zeros(pts.shape[0])
        for (a, b, c), v in self.items():
            vals += v * pts[:, 0]**a * pts[:, 1]**b * pts[:, 2]**c
        return vals


def _apply_first_order(terms, coef_i, coef_j, axis_j, axis_i):
    """Apply (x_i d_j - x_j d_i)-style operator  c_i * d_{axis_j} - c_j * d_{axis_i}
    to a dict {k: PolyCoef} representing sum_k Q_k(x) D^k."""
    out = {}

    def add(k, poly):
        if k in out:
            for e, c in poly.items():
                out[k][e] = out[k].get(e, 0.0) + c
        else:
            out[k] = PolyCoef(poly)

    for k, Q in terms.items():
        for coef, ax in ((coef_i, axis_j), (coef_j, axis_i)):
            # coef * d_ax (Q D^k) = coef*(d_ax Q) D^k + coef*Q D^{k+e_ax}
            add(k, coef * Q.diff(ax))
            k2 = list(k)
            k2[ax] += 1
            add(tuple(k2), coef * Q)
    return {k: v for k, v in out.items() if any(abs(c) > 0 for c in v.values())}


def rectangular_expansion(m, n):
    """Expand rad^m ang^n symbolically into sum_k Q_k(x) D^k.

    Returns {(k1,k2,k3): PolyCoef}.  Exhibits the smooth-coefficient
    rectangular form of the composite operator; used as an executable check
    that such an expansion exists and matches the operator's action.
    """
    terms = {(0, 0, 0): PolyCoef({(0, 0, 0): 1.0})}
    x1 = PolyCoef({(1, 0, 0): 1.0})
    x2 = PolyCoef({(0, 1, 0): 1.0})
    x3 = PolyCoef({(0, 0, 1): 1.0})
    neg = lambda p: PolyCoef({e: -c for e, c in p.items()})
    n1, n2, n3 = n
    for _ in range(n3):                       # ang23 = x2 d3 - x3 d2
        terms = _apply_first_order(terms, x2, neg(x3), 2, 1)
    for _ in range(n2):                       # ang13 = x1 d3 - x3 d1
        terms = _apply_first_order(terms, x1, neg(x3), 2, 0)
    for _ in range(n1):                       # ang12 = x1 d2 - x2 d1
        terms = _apply_first_order(terms, x1, neg(x2), 1, 0)
    for _ in range(m):                        # rad = x1 d1 + x2 d2 + x3 d3
        part = _apply_first_order(terms, x1, PolyCoef(), 0, 0)
        part2 = _apply_first_order(terms, x2, PolyCoef(), 1, 0)
        part3 = _apply_first_order(terms, x3, PolyCoef(), 2, 0)
        merged = {}
        for d in (part, part2, part3):
            for k, Q in d.items():
                if k in merged:
                    for e, c in Q.items():
                        merged[k][e] = merged[k].get(e, 0.0) + c
                else:
                    merged[k] = PolyCoef(Q)
        terms = merged
    return terms
