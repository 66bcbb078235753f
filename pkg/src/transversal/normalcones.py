"""Convex, proximal and limiting normal cones, and a Fréchet-normality falsifier."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .geometry import as_vector, sample_ball, unit
from .projections import (
    MEMBERSHIP_TOL,
    TIE_TOL,
    AffineSubspace,
    Ball,
    FiniteUnion,
    Polyhedron,
    Polytope,
)


class MembershipError(ValueError):
    pass


class ArgumentError(ValueError):
    pass


def _dedupe(dirs, tol=1e-10):
    out = []
    for d in dirs:
        if not any(d @ e > 1 - tol for e in out):
            out.append(d)
    return out


class ConeRep:
    """conv cone(generators) + span(lineality); the zero cone has neither."""

    def __init__(self, dim, generators=(), lineality=(), exact=True):
        self.dim = dim
        gens = [unit(g) for g in generators]
        self.generators = np.array(_dedupe([g for g in gens if g is not None])).reshape(-1, dim)
        L = np.asarray(lineality, dtype=float).reshape(-1, dim)
        if L.shape[0]:
            U, s, _ = np.linalg.svd(L.T, full_matrices=False)
            L = U[:, : int(np.sum(s > 1e-12))].T
        self.lineality = L
        self.exact = exact

    @property
    def is_zero(self):
        return self.generators.shape[0] == 0 and self.lineality.shape[0] == 0

    def distance(self, v):
        v = np.asarray(v, dtype=float)
        L = self.lineality
        w = v - L.T @ (L @ v) if L.shape[0] else v
        if self.generators.shape[0] == 0:
            return float(np.linalg.norm(w))
        G = self.generators
        if L.shape[0]:
            G = G - (G @ L.T) @ L
        _, resid = nnls(G.T, w)
        return float(resid)

    def contains(self, v, tol=1e-9):
        return self.distance(v) <= tol * max(1.0, float(np.linalg.norm(v)))

    def directions(self, rng=None, n_random=0):
        """Unit directions of the cone: extreme rays, ± lineality, random combinations."""
        out = list(self.generators) + list(self.lineality) + list(-self.lineality)
        if rng is not None and not self.is_zero:
            for _ in range(n_random):
                v = np.zeros(self.dim)
                if self.generators.shape[0]:
                    v += rng.exponential(size=self.generators.shape[0]) @ self.generators
                if self.lineality.shape[0]:
                    v += rng.standard_normal(self.lineality.shape[0]) @ self.lineality
                u = unit(v)
                if u is not None:
                    out.append(u)
        return out

    def __repr__(self):
        return (f"ConeRep(generators={self.generators.round(6).tolist()}, "
                f"lineality={self.lineality.round(6).tolist()}, exact={self.exact})")


@dataclass(frozen=True, eq=False)
class NormalSample:
    base: np.ndarray
    direction: np.ndarray
    kind: str
    radius: float = float("nan")


def convex_normal_cone(S, a, tol=MEMBERSHIP_TOL, rng=None):
    """Normal cone of convex analysis at a ∈ S."""
    if not S.is_convex:
        raise ValueError("convex_normal_cone needs a convex set")
    a = as_vector(a, S.dim)
    if not S.contains(a, tol):
        raise MembershipError(f"{a.tolist()} is not in the set")
    n = S.dim
    if isinstance(S, AffineSubspace):
        return ConeRep(n, lineality=S.complement)
    if isinstance(S, Polyhedron):
        act = S.active(a, max(tol, S._feas_tol()))
        return ConeRep(n, generators=S.normals[act])
    if isinstance(S, Ball):
        d = a - S.center
        if np.linalg.norm(d) >= S.radius - tol:
            return ConeRep(n, generators=[d])
        return ConeRep(n)
    if isinstance(S, Polytope):
        h = S.hrep()
        if h is not None:
            N, b = h
            act = np.flatnonzero(np.abs(N @ a - b) <= max(tol, 1e-9))
            return ConeRep(n, generators=N[act])
    # oracle sets and lower-dimensional polytopes: sampled fallback
    rng = rng if rng is not None else np.random.default_rng(0)
    samples = proximal_normals(S, a, 64, 0.1, rng)
    return ConeRep(n, generators=[s.direction for s in samples], exact=False)


def _piece_directions(S, a, rng, n_random):
    dirs = []
    for piece in S.pieces_containing(a):
        if piece.is_convex:
            try:
                dirs.extend(convex_normal_cone(piece, a, rng=rng).directions(rng, n_random))
            except MembershipError:
                pass
    return dirs


def _projects_back(S, a, d, radius, tie_tol):
    for j in range(13):
        z = a + radius * 0.5 ** j * d
        res = S.project(z)
        if res.dist > 0 and any(np.linalg.norm(q - a) <= tie_tol for q in res.nearest):
            return True
    return False


def proximal_normals(S, a, n_samples, radius, rng, tie_tol=TIE_TOL, kind="proximal"):
    """Unit proximal normals at a, each certified by a point projecting back onto a.

    Candidates come from ambient samples in the ball (their own direction when
    they project onto a, else their residual direction) and from the convex
    normal cones of the pieces through a. Only a subset of the cone is found.
    """
    a = as_vector(a, S.dim)
    scale_tol = tie_tol * max(1.0, float(np.linalg.norm(a)))
    accepted, rejected = [], []

    def consider(d):
        d = unit(d)
        if d is None:
            return
        if any(d @ e > 1 - 1e-10 for e in accepted) or any(d @ e > 1 - 1e-10 for e in rejected):
            return
        (accepted if _projects_back(S, a, d, radius, scale_tol) else rejected).append(d)

    for d in _piece_directions(S, a, rng, 4):
        consider(d)
    for _ in range(n_samples):
        x = sample_ball(rng, a, radius)
        res = S.project(x)
        if res.dist <= 0:
            continue
        if any(np.linalg.norm(q - a) <= scale_tol for q in res.nearest):
            d = unit(x - a)
            if d is not None and not any(d @ e > 1 - 1e-10 for e in accepted):
                accepted.append(d)
        else:
            consider(x - res.point)
    return [NormalSample(a.copy(), d, kind, radius) for d in accepted]


def limiting_normals(S, xbar, schedule, rng, n_base=12, n_dir=12):
    """Proximal normals at points of S near xbar, collected per radius of ``schedule``."""
    xbar = as_vector(xbar, S.dim)
    out = []
    for r in schedule:
        bases = [xbar]
        for _ in range(n_base):
            p = S.project(sample_ball(rng, xbar, r)).point
            if np.linalg.norm(p - xbar) <= r:
                bases.append(p)
        for a in bases:
            out.extend(proximal_normals(S, a, n_dir, r, rng, kind="limiting"))
    return out


def finest(samples):
    """Samples collected at the smallest radius."""
    if not samples:
        return []
    r = min(s.radius for s in samples)
    return [s for s in samples if s.radius == r]


@dataclass(frozen=True, eq=False)
class FrechetVerdict:
    refuted: bool
    witness: object = None
    ratios: tuple = ()

    @property
    def plausible(self):
        return not self.refuted


def frechet_normal_check(S, a, v, radii, rng, tol=1e-6, n_samples=200):
    """One-sided test of v ∈ N_S(a): a persistently positive angle ratio refutes it."""
    a = as_vector(a, S.dim)
    v = as_vector(v, S.dim)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ArgumentError("the zero vector is trivially normal")
    ratios, witness = [], None
    for r in radii:
        best, arg = -np.inf, None
        for _ in range(n_samples):
            s = S.project(sample_ball(rng, a, r)).point
            ds = np.linalg.norm(s - a)
            if ds <= 1e-12 * max(1.0, r):
                continue
            q = float(v @ (s - a) / (nv * ds))
            if q > best:
                best, arg = q, s
        ratios.append(best)
        if arg is not None:
            witness = arg
    refuted = bool(ratios) and all(q > tol for q in ratios)
    return FrechetVerdict(refuted, witness if refuted else None, tuple(ratios))
