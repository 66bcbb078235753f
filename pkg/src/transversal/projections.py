"""Exact Euclidean projections onto the supported closed sets.

Every set exposes ``dim``, ``project(x) -> ProjectionResult``, ``distance(x)``,
``contains(x, tol)``, ``translate(v)``, ``point()`` and ``is_convex``.
Intersections are built by :func:`intersect`, which returns an exact set when
the class is closed under intersection and an oracle otherwise.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .geometry import DimensionMismatch, as_vector

log = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-9
TIE_TOL = 1e-9
MAX_ROWS = 12
DYKSTRA_MAX_ITER = 10_000
DYKSTRA_TOL = 1e-10


class EmptyIntersection(ValueError):
    pass


class EmptySet(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    nearest: tuple
    dist: float

    @property
    def point(self):
        return self.nearest[0]


class _SetBase:
    is_convex = True
    is_oracle = False

    def distance(self, x):
        return self.project(x).dist

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return self.distance(x) <= tol

    def _check(self, x):
        return as_vector(x, self.dim)

    def pieces_containing(self, x, tol=MEMBERSHIP_TOL):
        return [self] if self.contains(x, tol) else []


class AffineSubspace(_SetBase):
    """base + span(basis); an empty basis gives the singleton {base}."""

    def __init__(self, base, basis=()):
        self.base = as_vector(base)
        n = self.base.size
        B = np.asarray(basis, dtype=float).reshape(-1, n) if len(basis) else np.zeros((0, n))
        if B.shape[0] > n:
            raise ValueError("more basis vectors than the ambient dimension")
        if B.shape[0] and not np.allclose(B @ B.T, np.eye(B.shape[0]), atol=1e-10):
            raise ValueError("affine basis must be orthonormal")
        self.basis = B
        self.dim = n

    @classmethod
    def from_spanning(cls, base, vectors):
        """Affine subspace through ``base`` spanned by arbitrary vectors."""
        base = as_vector(base)
        V = np.asarray(vectors, dtype=float).reshape(-1, base.size)
        if V.shape[0] == 0:
            return cls(base)
        U, s, _ = np.linalg.svd(V.T, full_matrices=False)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
        return cls(base, U[:, :rank].T)

    @cached_property
    def complement(self):
        """Orthonormal basis of the orthogonal complement of the direction space."""
        n = self.dim
        if self.basis.shape[0] == 0:
            return np.eye(n)
        U, s, _ = np.linalg.svd(self.basis.T, full_matrices=True)
        return U[:, self.basis.shape[0]:].T

    def project(self, x):
        x = self._check(x)
        d = x - self.base
        p = self.base + self.basis.T @ (self.basis @ d)
        return ProjectionResult((p,), float(np.linalg.norm(x - p)))

    def translate(self, v):
        return AffineSubspace(self.base + as_vector(v, self.dim), self.basis)

    def point(self):
        return self.base.copy()

    def __repr__(self):
        return f"AffineSubspace(base={self.base.tolist()}, basis={self.basis.tolist()})"


class Polyhedron(_SetBase):
    """{x : <normal_i, x> <= offset_i}; nonemptiness is certified by a witness point."""

    def __init__(self, normals, offsets, witness=None):
        N = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.asarray(offsets, dtype=float).reshape(-1)
        if N.shape[0] != b.size:
            raise ValueError("normals and offsets disagree in length")
        if N.shape[0] == 0:
            raise ValueError("polyhedron needs at least one row")
        if N.shape[0] > MAX_ROWS:
            raise ValueError(f"at most {MAX_ROWS} rows supported, got {N.shape[0]}")
        if np.any(np.linalg.norm(N, axis=1) == 0):
            raise ValueError("zero normal row")
        self.normals, self.offsets = N, b
        self.dim = N.shape[1]
        as_vector(np.zeros(self.dim))
        if witness is None:
            witness = _lp_witness(N, b)
            if witness is None:
                raise EmptySet("polyhedron is empty")
        witness = as_vector(witness, self.dim)
        excess = float(np.max(N @ witness - b))
        if excess > 1e-6 * max(1.0, float(np.max(np.abs(b)))):
            raise EmptySet("supplied witness is not feasible")
        if excess > self._feas_tol():
            # LP solutions are feasible to ~1e-7 only
            witness = project_polyhedron_exact(self, witness)
        self.witness = witness

    def _feas_tol(self):
        return MEMBERSHIP_TOL * max(1.0, float(np.max(np.abs(self.offsets))))

    @classmethod
    def from_affine(cls, S):
        C = S.complement
        c = C @ S.base
        return cls(np.vstack([C, -C]), np.concatenate([c, -c]), witness=S.base)

    def residual(self, x):
        return float(max(0.0, np.max(self.normals @ x - self.offsets)))

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return self.residual(self._check(x)) <= tol

    def active(self, x, tol=MEMBERSHIP_TOL):
        return np.flatnonzero(np.abs(self.normals @ x - self.offsets) <= tol)

    def project(self, x):
        x = self._check(x)
        p = project_polyhedron_exact(self, x)
        return ProjectionResult((p,), float(np.linalg.norm(x - p)))

    def translate(self, v):
        v = as_vector(v, self.dim)
        return Polyhedron(self.normals, self.offsets + self.normals @ v, self.witness + v)

    def point(self):
        return self.witness.copy()

    def __repr__(self):
        return f"Polyhedron(rows={len(self.offsets)}, dim={self.dim})"


def _lp_witness(N, b):
    n = N.shape[1]
    res = linprog(np.zeros(n), A_ub=N, b_ub=b, bounds=[(None, None)] * n, method="highs")
    if res.status != 0:
        return None
    return res.x


def project_polyhedron_exact(P, x):
    """Projection by enumerating active sets in order of increasing size.

    The first candidate that is primal feasible with nonnegative multipliers
    satisfies the KKT conditions of a convex QP, hence is the unique minimiser.
    """
    x = as_vector(x, P.dim)
    N, b = P.normals, P.offsets
    ftol = P._feas_tol()
    if np.all(N @ x <= b + ftol):
        return x.copy()
    m, n = N.shape
    viol = N @ x - b
    # rows violated at x are the likeliest to be active
    order = np.argsort(-viol, kind="stable")
    for k in range(1, min(m, n) + 1):
        for S in itertools.combinations(order, k):
            S = list(S)
            NS = N[S]
            G = NS @ NS.T
            if np.linalg.cond(G) > 1e12:
                log.debug("skipping singular active set %s", S)
                continue
            lam = np.linalg.solve(G, NS @ x - b[S])
            if np.any(lam < -1e-10):
                continue
            p = x - NS.T @ lam
            if np.all(N @ p <= b + ftol):
                return p
    raise RuntimeError("active-set enumeration found no KKT point")


class Ball(_SetBase):
    def __init__(self, center, radius):
        self.center = as_vector(center)
        self.radius = float(radius)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        self.dim = self.center.size

    def project(self, x):
        x = self._check(x)
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return ProjectionResult((x.copy(),), 0.0)
        p = self.center + d * (self.radius / r)
        return ProjectionResult((p,), float(r - self.radius))

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return np.linalg.norm(self._check(x) - self.center) <= self.radius + tol

    def translate(self, v):
        return Ball(self.center + as_vector(v, self.dim), self.radius)

    def point(self):
        return self.center.copy()

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


def min_norm_point(P, tol=1e-12, max_iter=500):
    """Wolfe's algorithm: the point of minimum norm in conv(rows of P)."""
    P = np.asarray(P, dtype=float)
    scale = max(1.0, float(np.max(np.sum(P * P, axis=1))))
    j = int(np.argmin(np.sum(P * P, axis=1)))
    S, lam = [j], np.array([1.0])
    x = P[j].copy()
    for _ in range(max_iter):
        g = P @ x
        j = int(np.argmin(g))
        if x @ x - g[j] <= tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        for _ in range(max_iter):
            Q = P[S]
            k = len(S)
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = Q @ Q.T
            K[:k, k] = K[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            mu = np.linalg.lstsq(K, rhs, rcond=None)[0][:k]
            if np.all(mu > tol):
                lam = mu
                break
            neg = mu <= tol
            steps = lam[neg] / np.maximum(lam[neg] - mu[neg], 1e-300)
            theta = float(min(1.0, np.min(steps)))
            lam = lam + theta * (mu - lam)
            keep = lam > tol
            if not np.any(keep):
                keep[np.argmax(lam)] = True
            S = [s for s, kk in zip(S, keep) if kk]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ P[S]
    return x


class Polytope(_SetBase):
    """Convex hull of finitely many vertices."""

    def __init__(self, vertices):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if V.shape[0] == 0:
            raise ValueError("polytope needs at least one vertex")
        for v in V:
            as_vector(v)
        self.vertices = V
        self.dim = V.shape[1]
        self._hrep = None

    def project(self, x):
        x = self._check(x)
        p = x + min_norm_point(self.vertices - x)
        return ProjectionResult((p,), float(np.linalg.norm(x - p)))

    def hrep(self):
        """(normals, offsets) of the facets for full-dimensional polytopes, else None."""
        if self._hrep is None:
            self._hrep = _polytope_hrep(self.vertices)
        return self._hrep if self._hrep is not False else None

    def translate(self, v):
        return Polytope(self.vertices + as_vector(v, self.dim))

    def point(self):
        return self.vertices[0].copy()

    def __repr__(self):
        return f"Polytope({len(self.vertices)} vertices, dim={self.dim})"


def _polytope_hrep(V):
    n = V.shape[1]
    if n == 1:
        lo, hi = V.min(), V.max()
        if hi - lo <= 1e-12:
            return False
        return np.array([[1.0], [-1.0]]), np.array([hi, -lo])
    try:
        hull = ConvexHull(V)
    except (QhullError, ValueError):
        return False
    eq = hull.equations
    normals = eq[:, :-1]
    offsets = -eq[:, -1]
    # merge coplanar facets produced by triangulation
    keep = []
    for i in range(len(offsets)):
        if not any(np.allclose(normals[i], normals[j], atol=1e-10) and abs(offsets[i] - offsets[j]) < 1e-10
                   for j in keep):
            keep.append(i)
    return normals[keep], offsets[keep]


class FiniteUnion(_SetBase):
    is_convex = False

    def __init__(self, pieces):
        pieces = list(pieces)
        if not pieces:
            raise ValueError("union needs at least one piece")
        if any(isinstance(p, FiniteUnion) for p in pieces):
            raise ValueError("nested unions are not supported")
        dims = {p.dim for p in pieces}
        if len(dims) != 1:
            raise DimensionMismatch("union pieces differ in dimension")
        self.pieces = pieces
        self.dim = dims.pop()

    def project(self, x):
        x = self._check(x)
        results = [p.project(x) for p in self.pieces]
        dmin = min(r.dist for r in results)
        nearest = []
        for r in results:
            if r.dist <= dmin + TIE_TOL:
                for q in r.nearest:
                    if not any(np.linalg.norm(q - s) <= TIE_TOL for s in nearest):
                        nearest.append(q)
        return ProjectionResult(tuple(nearest), float(dmin))

    def pieces_containing(self, x, tol=MEMBERSHIP_TOL):
        return [p for p in self.pieces if p.contains(x, tol)]

    def translate(self, v):
        return FiniteUnion([p.translate(v) for p in self.pieces])

    def point(self):
        return self.pieces[0].point()

    def __repr__(self):
        return f"FiniteUnion({self.pieces!r})"


class IntersectionOracle(_SetBase):
    """Distance to A∩B when no exact representation is available."""

    is_oracle = True
    residual = 0.0


class BallLens(IntersectionOracle):
    """Closed-form projection onto the intersection of two balls."""

    def __init__(self, A, B):
        self.A, self.B = A, B
        self.dim = A.dim
        d = np.linalg.norm(B.center - A.center)
        if d > A.radius + B.radius + MEMBERSHIP_TOL:
            raise EmptyIntersection("balls are disjoint")
        self._d = d

    def project(self, x):
        x = self._check(x)
        A, B = self.A, self.B
        pa = A.project(x).point
        if B.contains(pa, 1e-12):
            return ProjectionResult((pa,), float(np.linalg.norm(x - pa)))
        pb = B.project(x).point
        if A.contains(pb, 1e-12):
            return ProjectionResult((pb,), float(np.linalg.norm(x - pb)))
        d = self._d
        e = (B.center - A.center) / d
        t = (d * d + A.radius ** 2 - B.radius ** 2) / (2 * d)
        rim = np.sqrt(max(A.radius ** 2 - t * t, 0.0))
        m = A.center + t * e
        w = x - m
        w = w - (w @ e) * e
        nw = np.linalg.norm(w)
        if nw <= 1e-15:
            w = _any_orthogonal(e)
            nw = 1.0
        p = m + rim * w / nw
        return ProjectionResult((p,), float(np.linalg.norm(x - p)))

    def translate(self, v):
        return BallLens(self.A.translate(v), self.B.translate(v))

    def point(self):
        return self.project(self.A.center).point


def _any_orthogonal(e):
    n = e.size
    if n == 1:
        return np.zeros(1)
    i = int(np.argmin(np.abs(e)))
    v = np.zeros(n)
    v[i] = 1.0
    v -= (v @ e) * e
    return v / np.linalg.norm(v)


class DykstraIntersection(IntersectionOracle):
    """Dykstra's algorithm for the projection onto A∩B of two convex sets."""

    def __init__(self, A, B, max_iter=DYKSTRA_MAX_ITER, tol=DYKSTRA_TOL):
        if not (A.is_convex and B.is_convex):
            raise ValueError("Dykstra oracle needs convex sets")
        self.A, self.B = A, B
        self.dim = A.dim
        self.max_iter, self.tol = max_iter, tol
        gap = self._gap()
        if gap > 1e-6:
            raise EmptyIntersection(f"sets are at distance {gap:.3g}")

    def _gap(self):
        x = self.A.point()
        prev = np.inf
        for _ in range(self.max_iter):
            b = self.B.project(x).point
            x = self.A.project(b).point
            gap = float(np.linalg.norm(x - b))
            if gap <= self.tol or prev - gap <= 1e-14:
                return gap
            prev = gap
        return gap

    def project(self, x):
        x = self._check(x)
        y = x.copy()
        p = np.zeros_like(x)
        q = np.zeros_like(x)
        a = y
        for _ in range(self.max_iter):
            a = self.A.project(y + p).point
            p = y + p - a
            b = self.B.project(a + q).point
            q = a + q - b
            done = np.linalg.norm(b - y) <= self.tol and np.linalg.norm(a - b) <= self.tol
            y = b
            if done:
                break
        self.residual = float(np.linalg.norm(a - y))
        return ProjectionResult((y,), float(np.linalg.norm(x - y)))

    def translate(self, v):
        return DykstraIntersection(self.A.translate(v), self.B.translate(v), self.max_iter, self.tol)

    def point(self):
        return self.project(self.A.point()).point


def project(S, x):
    return S.project(x)


def distance(S, x):
    return S.project(x).dist


def _affine_affine(A, B):
    n = A.dim
    U, V = A.basis.T, B.basis.T
    M = np.hstack([U, -V]) if U.size + V.size else np.zeros((n, 0))
    rhs = B.base - A.base
    if M.shape[1]:
        st, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        resid = np.linalg.norm(M @ st - rhs)
    else:
        st = np.zeros(0)
        resid = np.linalg.norm(rhs)
    if resid > 1e-9 * max(1.0, np.linalg.norm(rhs)):
        raise EmptyIntersection("affine subspaces do not meet")
    k = U.shape[1]
    p = A.base + U @ st[:k]
    if M.shape[1] == 0:
        return AffineSubspace(p)
    _, s, Vt = np.linalg.svd(M)
    rank = int(np.sum(s > 1e-10))
    null = Vt[rank:].T
    dirs = (U @ null[:k]).T if null.size else np.zeros((0, n))
    return AffineSubspace.from_spanning(p, dirs)


def _cheap_witness(PA, PB, N, b):
    """A known point of one polyhedron, or its projection onto the other, if feasible for both."""
    tol = MEMBERSHIP_TOL * max(1.0, float(np.max(np.abs(b))))
    for w in (PA.witness, PB.witness, PB.project(PA.witness).point):
        if np.max(N @ w - b) <= tol:
            return w
    return None


def _as_polyhedron(S):
    if isinstance(S, Polyhedron):
        return S
    if isinstance(S, AffineSubspace):
        if 2 * (S.dim - S.basis.shape[0]) > MAX_ROWS:
            return None
        return Polyhedron.from_affine(S)
    if isinstance(S, Polytope) and S.dim <= 3:
        h = S.hrep()
        if h is not None and len(h[1]) <= MAX_ROWS:
            return Polyhedron(h[0], h[1], witness=S.vertices.mean(axis=0))
    return None


def intersect(A, B):
    """A∩B as an exact set where possible, otherwise as an :class:`IntersectionOracle`."""
    if A.dim != B.dim:
        raise DimensionMismatch("sets live in different dimensions")
    if A is B:
        return A
    if isinstance(A, FiniteUnion) or isinstance(B, FiniteUnion):
        pa = A.pieces if isinstance(A, FiniteUnion) else [A]
        pb = B.pieces if isinstance(B, FiniteUnion) else [B]
        pieces = []
        for p in pa:
            for q in pb:
                try:
                    pieces.append(intersect(p, q))
                except EmptyIntersection:
                    pass
        if not pieces:
            raise EmptyIntersection("no pair of pieces meets")
        flat = []
        for p in pieces:
            flat.extend(p.pieces if isinstance(p, FiniteUnion) else [p])
        return flat[0] if len(flat) == 1 else FiniteUnion(flat)
    if isinstance(A, AffineSubspace) and isinstance(B, AffineSubspace):
        return _affine_affine(A, B)
    if isinstance(A, Ball) and isinstance(B, Ball):
        return BallLens(A, B)
    if not (A.is_oracle or B.is_oracle):
        PA, PB = _as_polyhedron(A), _as_polyhedron(B)
        if PA is not None and PB is not None and len(PA.offsets) + len(PB.offsets) <= MAX_ROWS:
            N = np.vstack([PA.normals, PB.normals])
            b = np.concatenate([PA.offsets, PB.offsets])
            w = _cheap_witness(PA, PB, N, b)
            if w is None:
                w = _lp_witness(N, b)
            if w is None:
                raise EmptyIntersection("polyhedral system infeasible")
            return Polyhedron(N, b, witness=w)
    return DykstraIntersection(A, B)
