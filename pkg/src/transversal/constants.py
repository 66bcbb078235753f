"""Sampling estimators of the regularity constants of a set pair and the
checkers for the inequalities relating them.

Every estimator follows one pattern: for each radius of a decreasing schedule
draw ``samples_per_radius`` admissible configurations near ``xbar``, take the
infimum of the relevant ratio, and report the value at the finest radius.
An empty admissible set counts as 1. Sample ``i`` at radius index ``k`` is
driven by its own generator seeded from ``(seed, estimator, k, i)``, so more
samples only ever add configurations and equal seeds give equal output.
"""

import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .geometry import as_vector, f_max, sample_ball, unit
from .normalcones import (
    MembershipError,
    ConeRep,
    convex_normal_cone,
    finest,
    limiting_normals,
    proximal_normals,
)
from .projections import EmptyIntersection, intersect
from .report import CheckReport

DEFAULT_RADII = tuple(0.5 * 2.0 ** -k for k in range(8))


class NonConvexInput(ValueError):
    pass


@dataclass(frozen=True)
class EstimatorConfig:
    radii: tuple = DEFAULT_RADII
    samples_per_radius: int = 400
    seed: int = 0
    membership_tol: float = 1e-9
    exclusion_tol: float = 1e-7
    slack: float = 0.05
    # only count (a, b, x) with |x-a| = |x-b| < alpha |x - xbar| in the dual estimators
    strengthened: bool = False
    strengthened_alpha: float = 1.0
    record_samples: bool = False

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if not radii:
            raise ValueError("radii must be nonempty")
        if any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        if radii[-1] < 1e-6:
            raise ValueError("finest radius must be at least 1e-6")
        if self.samples_per_radius < 100:
            raise ValueError("samples_per_radius must be at least 100")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass
class ConstantEstimate:
    name: str
    value: float
    bias: str
    per_radius: list
    argmin_witness: dict = None
    notes: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class SubgradientTriple:
    x1s: np.ndarray
    x2s: np.ndarray
    xs: np.ndarray

    def __post_init__(self):
        s = np.linalg.norm(self.x1s) + np.linalg.norm(self.x2s)
        if abs(s - 1) > 1e-10 or np.linalg.norm(self.xs + self.x1s + self.x2s) > 1e-10:
            raise ValueError("triple must satisfy xs = -(x1s + x2s) and |x1s| + |x2s| = 1")

    @classmethod
    def from_pair(cls, x1s, x2s):
        x1s, x2s = np.asarray(x1s, float), np.asarray(x2s, float)
        return cls(x1s, x2s, -(x1s + x2s))


def _tag(name):
    return zlib.crc32(name.encode())


def _rng(cfg, name, k, i):
    return np.random.default_rng([cfg.seed, _tag(name), k, i])


def sample_infimum(cfg, tag, one, empty_value=1.0, clamp=True):
    """Per-radius infimum of ``one(r, rng, i)``, which returns None or (value, witness).

    Returns the ``(radius, inf_value, n_admissible)`` rows and the witness at the finest radius.
    """
    per_radius, witness = [], None
    for k, r in enumerate(cfg.radii):
        best, arg, n_adm = math.inf, None, 0
        for i in range(cfg.samples_per_radius):
            out = one(r, _rng(cfg, tag, k, i), i)
            if out is None:
                continue
            n_adm += 1
            if out[0] < best - 1e-12:
                best, arg = out
        if n_adm == 0:
            value = empty_value
        else:
            value = float(min(max(best, 0.0), 1.0)) if clamp else float(max(best, 0.0))
        per_radius.append((r, value, n_adm))
        witness = arg
    return per_radius, witness


def _run(name, cfg, one, bias="upper-bound", rng_name=None):
    per_radius, witness = sample_infimum(cfg, rng_name or name, one)
    return ConstantEstimate(name, per_radius[-1][1], bias, per_radius, witness)


def _near_point(S, xbar, r, rng, i=None):
    """A point of S in B_r(xbar), boundary-biased by projecting an ambient sample."""
    if i == 0:
        return xbar.copy()
    p = S.project(sample_ball(rng, xbar, r)).point
    return p if np.linalg.norm(p - xbar) < r else None


def _unit_normals(S, a, rng, r, n_random=4):
    if S.is_convex and not S.is_oracle:
        try:
            return convex_normal_cone(S, a).directions(rng, n_random)
        except MembershipError:
            return []
    return [s.direction for s in proximal_normals(S, a, 8, r, rng)]


def _normal_cone_distance(S, a, v):
    """d(v, N_S(a)); for unions the largest distance to the cones of the pieces through a."""
    pieces = S.pieces_containing(a)
    if not pieces:
        return float(np.linalg.norm(v))
    return max(convex_normal_cone(p, a).distance(v) for p in pieces)


# ---------------------------------------------------------------------------
# primal constants


def estimate_str(A, B, xbar, cfg=EstimatorConfig()):
    xbar = as_vector(xbar, A.dim)
    C = intersect(A, B)

    def one(r, rng, i):
        x = sample_ball(rng, xbar, r)
        dc = C.distance(x)
        if dc <= cfg.exclusion_tol:
            return None
        return max(A.distance(x), B.distance(x)) / dc, {"x": x}

    est = _run("str", cfg, one)
    if C.is_oracle:
        est.notes["oracle_residual"] = C.residual
    return est


def estimate_str_prime(A, B, xbar, cfg=EstimatorConfig()):
    xbar = as_vector(xbar, A.dim)
    C = intersect(A, B)

    def one(r, rng, i):
        x = A.project(sample_ball(rng, xbar, r)).point
        if np.linalg.norm(x - xbar) >= r:
            return None
        dc = C.distance(x)
        if dc <= cfg.exclusion_tol:
            return None
        return B.distance(x) / dc, {"x": x}

    return _run("str_prime", cfg, one)


def estimate_tr(A, B, xbar, cfg=EstimatorConfig()):
    xbar = as_vector(xbar, A.dim)
    zero = np.zeros(A.dim)
    empties = []

    def one(r, rng, i):
        x1 = sample_ball(rng, zero, r)
        x2 = sample_ball(rng, zero, r)
        x = sample_ball(rng, xbar, r)
        At, Bt = A.translate(-x1), B.translate(-x2)
        try:
            C = intersect(At, Bt)
        except EmptyIntersection:
            empties.append(r)
            return 0.0, {"x": x, "x1": x1, "x2": x2, "empty_intersection": True}
        dc = C.distance(x)
        if dc <= cfg.exclusion_tol:
            return None
        return max(At.distance(x), Bt.distance(x)) / dc, {"x": x, "x1": x1, "x2": x2}

    est = _run("tr", cfg, one)
    est.notes["empty_translations"] = {r: empties.count(r) for r in cfg.radii}
    return est


def check_P1_sandwich(str_est, str_prime_est, slack=0.05):
    s, sp = _val(str_est), _val(str_prime_est)
    rep = CheckReport("P1")
    lower = 0.0 if sp <= 0 else 1.0 / (2.0 / sp + 1.0)
    rep.add("1/(2/str'+1) <= str", lower - slack, s)
    rep.add("str <= str'", s, sp + slack)
    return rep


def _val(e):
    return e.value if isinstance(e, ConstantEstimate) else float(e)


# ---------------------------------------------------------------------------
# dual constants


def estimate_tr_dual(A, B, xbar, cfg=EstimatorConfig()):
    """inf |x1* + x2*| over normals at nearby points with |x1*| + |x2*| = 1.

    For unit directions u1, u2 the weight split minimising the sum is 1/2, so
    each pair contributes sqrt((1 + <u1,u2>) / 2).
    """
    xbar = as_vector(xbar, A.dim)

    def one(r, rng, i):
        a = _near_point(A, xbar, r, rng, i)
        b = _near_point(B, xbar, r, rng, i)
        if a is None or b is None:
            return None
        U1, U2 = _unit_normals(A, a, rng, r), _unit_normals(B, b, rng, r)
        if not U1 or not U2:
            return None
        G = np.array(U1) @ np.array(U2).T
        j1, j2 = np.unravel_index(np.argmin(G), G.shape)
        c = float(G[j1, j2])
        return math.sqrt(max(0.0, (1 + c) / 2)), {"a": a, "b": b, "x1s": U1[j1] / 2, "x2s": U2[j2] / 2}

    return _run("tr_dual", cfg, one)


@dataclass(frozen=True, eq=False)
class C00Verdict:
    violated: bool
    u: np.ndarray = None

    @property
    def status(self):
        return "Violated" if self.violated else "TransversalCertifiedHeuristically"


def _cones_by_base(samples, dim):
    groups = {}
    for s in samples:
        groups.setdefault(tuple(np.round(s.base, 12)), []).append(s.direction)
    return [ConeRep(dim, generators=g) for g in groups.values()]


def check_C00(A, B, xbar, cfg=EstimatorConfig(), ang_tol=1e-6, n_scales=3):
    """Search for u in the limiting cone of A with -u in the limiting cone of B."""
    xbar = as_vector(xbar, A.dim)
    rng = np.random.default_rng([cfg.seed, _tag("C00")])
    schedule = cfg.radii[-n_scales:]
    LA = finest(limiting_normals(A, xbar, schedule, rng))
    LB = finest(limiting_normals(B, xbar, schedule, rng))
    cones_a, cones_b = _cones_by_base(LA, A.dim), _cones_by_base(LB, B.dim)
    for s in LA:
        if any(c.distance(-s.direction) <= ang_tol for c in cones_b):
            return C00Verdict(True, s.direction)
    for s in LB:
        if any(c.distance(-s.direction) <= ang_tol for c in cones_a):
            return C00Verdict(True, -s.direction)
    return C00Verdict(False)


def subdiff_f_membership(t, x1, x2, x, tol=1e-8):
    """Whether (x1*, x2*, x*) lies in the subdifferential of f = max{|x1-x|, |x2-x|}."""
    x1, x2, x = (as_vector(v) for v in (x1, x2, x))
    d1, d2 = np.linalg.norm(x1 - x), np.linalg.norm(x2 - x)
    if d1 == 0 and d2 == 0:
        raise ValueError("the characterisation needs x1 != x or x2 != x")
    x1s, x2s, xs = (np.asarray(v, float) for v in (t.x1s, t.x2s, t.xs))
    n1, n2 = np.linalg.norm(x1s), np.linalg.norm(x2s)
    return bool(
        np.linalg.norm(x1s + x2s + xs) <= tol
        and abs(n1 + n2 - 1) <= tol
        and abs(x1s @ (x1 - x) - n1 * d1) <= tol
        and abs(x2s @ (x2 - x) - n2 * d2) <= tol
        and not (d1 < d2 - tol and n1 > tol)
        and not (d2 < d1 - tol and n2 > tol)
    )


def _tilt(n, theta, rng):
    """Unit vector at angle ``theta`` from unit ``n`` in a random direction."""
    if theta <= 0 or n.size == 1:
        return n
    w = rng.standard_normal(n.size)
    w -= (w @ n) * n
    w = unit(w)
    if w is None:
        return n
    return math.cos(theta) * n + math.sin(theta) * w


def _equalizing_step(Q, p, m, smax):
    """s > 0 with d(p + s m, Q) = s; the residual is nonincreasing in s."""
    phi = lambda s: Q.distance(p + s * m) - s
    if phi(smax) > 0:
        return None
    return brentq(phi, 0.0, smax, xtol=1e-15, rtol=1e-14)


def _aligned_triple(A, B, xbar, r, rng, excl):
    """(a, b, x) with a ∈ A∖B, b ∈ B∖A, |x-a| = |x-b| and x - a, x - b (nearly) normal.

    Start from a normal n at a point p of one set, tilt it by at most r,
    walk along it until the distance to the other set equals the walked
    length, and take the nearest point there as the partner.
    """
    from_a = rng.random() < 0.5
    P, Q = (A, B) if from_a else (B, A)
    p = _near_point(P, xbar, r, rng)
    if p is None or Q.distance(p) <= excl:
        return None
    normals = _unit_normals(P, p, rng, r)
    if not normals:
        return None
    n = normals[rng.integers(len(normals))]
    m = _tilt(n, r * rng.random(), rng)
    s = _equalizing_step(Q, p, m, 2 * r)
    if s is None or s <= 0:
        return None
    x = p + s * m
    q = Q.project(x).point
    if np.linalg.norm(x - xbar) >= r or np.linalg.norm(q - xbar) >= r or P.distance(q) <= excl:
        return None
    nq = unit(x - q)
    if nq is None:
        return None
    if from_a:
        return dict(a=p, b=q, x=x, na=n, nb=nq)
    return dict(a=q, b=p, x=x, na=nq, nb=n)


def _bisector_triple(A, B, xbar, r, rng, excl):
    a = _near_point(A, xbar, r, rng)
    b = _near_point(B, xbar, r, rng)
    if a is None or b is None or B.distance(a) <= excl or A.distance(b) <= excl:
        return None
    d = b - a
    nd = np.linalg.norm(d)
    if nd == 0:
        return None
    e = d / nd
    z = sample_ball(rng, xbar, r)
    x = z - ((z - (a + b) / 2) @ e) * e
    if np.linalg.norm(x - xbar) >= r:
        return None
    return dict(a=a, b=b, x=x, na=None, nb=None)


def _strength_ok(t, xbar, cfg):
    if not cfg.strengthened:
        return True
    return np.linalg.norm(t["x"] - t["a"]) < cfg.strengthened_alpha * np.linalg.norm(t["x"] - xbar)


def _w_interval_min(u1, d1, u2, d2, delta):
    """min over admissible w of |w u1 + (1-w) u2| with w d1 < delta, (1-w) d2 < delta."""
    lo = max(0.0, 1.0 - delta / d2) if d2 > 0 else 0.0
    hi = min(1.0, delta / d1) if d1 > 0 else 1.0
    if lo >= hi:
        return None
    w = min(max(0.5, lo), hi)
    return float(np.linalg.norm(w * u1 + (1 - w) * u2)), w


def _outer(A, B, xbar, r, rng, cfg, with_bisector=True):
    if with_bisector and rng.random() < 1 / 3:
        t = _bisector_triple(A, B, xbar, r, rng, cfg.exclusion_tol)
    else:
        t = _aligned_triple(A, B, xbar, r, rng, cfg.exclusion_tol)
    if t is None or not _strength_ok(t, xbar, cfg):
        return None
    return t


def estimate_itr(A, B, xbar, cfg=EstimatorConfig()):
    """inf |x1* + x2*| over nonzero normals at a ∈ A∖B, b ∈ B∖A aligned with x - a, x - b."""
    xbar = as_vector(xbar, A.dim)

    def one(r, rng, i):
        t = _outer(A, B, xbar, r, rng, cfg, with_bisector=False)
        if t is None:
            return None
        ua, ub = unit(t["x"] - t["a"]), unit(t["x"] - t["b"])
        # alignment cosines and distance ratio of the one-limit definition
        if t["na"] @ ua <= 1 - r or t["nb"] @ ub <= 1 - r:
            return None
        ratio = np.linalg.norm(t["x"] - t["a"]) / np.linalg.norm(t["x"] - t["b"])
        if not 1 - r < ratio < 1 + r:
            return None
        c = float(t["na"] @ t["nb"])
        return math.sqrt(max(0.0, (1 + c) / 2)), dict(t, x1s=t["na"] / 2, x2s=t["nb"] / 2)

    return _run("itr", cfg, one, rng_name="dual_outer")


def _itr_c_sample(A, B, t, delta):
    a, b, x = t["a"], t["b"], t["x"]
    ua, ub = unit(x - a), unit(x - b)
    if ua is None or ub is None:
        return None
    d1 = convex_normal_cone(A, a).distance(ua)
    d2 = convex_normal_cone(B, b).distance(ub)
    res = _w_interval_min(ua, d1, ub, d2, delta)
    if res is None:
        return None
    value, w = res
    return value, dict(a=a, b=b, x=x, x1s=w * ua, x2s=(1 - w) * ub)


def estimate_itr_c(A, B, xbar, cfg=EstimatorConfig()):
    """Convex dual constant: normals within distance r of the cones, exactly aligned."""
    if not (A.is_convex and B.is_convex):
        raise NonConvexInput("itr_c is defined for convex sets only")
    xbar = as_vector(xbar, A.dim)
    recorded = []

    def one(r, rng, i):
        t = _outer(A, B, xbar, r, rng, cfg)
        if t is None:
            return None
        out = _itr_c_sample(A, B, t, r)
        if out is not None and cfg.record_samples:
            recorded.append(out[1])
        return out

    est = _run("itr_c", cfg, one, rng_name="dual_outer")
    if cfg.record_samples:
        est.notes["dual_samples"] = recorded
    return est


def subgradient_triple(sample):
    """Subgradient triple of f at (a, b, x) assembled from an aligned dual pair."""
    return SubgradientTriple.from_pair(-sample["x1s"], -sample["x2s"])


def _bisect_point(z, p, q):
    d = q - p
    nd = np.linalg.norm(d)
    if nd == 0:
        return z
    e = d / nd
    return z - ((z - (p + q) / 2) @ e) * e


def estimate_itr_w(A, B, xbar, cfg=EstimatorConfig(), n_inner=6):
    """Two-scale estimate: outer aligned triples, inner perturbations at scale r**2."""
    xbar = as_vector(xbar, A.dim)

    def one(r, rng, i):
        t = _outer(A, B, xbar, r, rng, cfg)
        if t is None:
            return None
        a, b, x = t["a"], t["b"], t["x"]
        eps = r * r
        inner = np.random.default_rng([cfg.seed, _tag("itr_w_inner"), int(r * 1e9), i])
        best = None
        for j in range(n_inner):
            if j == 0:
                a1, b1, x1, x2, xp = a, b, a, b, x
            else:
                a1 = A.project(sample_ball(inner, a, eps)).point
                b1 = B.project(sample_ball(inner, b, eps)).point
                if np.linalg.norm(a1 - a) >= eps or np.linalg.norm(b1 - b) >= eps:
                    continue
                x1 = sample_ball(inner, a, eps / 2)
                x2 = sample_ball(inner, b, eps / 2)
                xp = _bisect_point(sample_ball(inner, x, eps / 2), x1, x2)
                if np.linalg.norm(xp - x) >= eps:
                    continue
            u1, u2 = unit(xp - x1), unit(xp - x2)
            if u1 is None or u2 is None:
                continue
            d1 = _normal_cone_distance(A, a1, u1)
            d2 = _normal_cone_distance(B, b1, u2)
            res = _w_interval_min(u1, d1, u2, d2, r)
            if res is not None and (best is None or res[0] < best[0] - 1e-12):
                best = (res[0], dict(a=a, b=b, x=x, a_in=a1, b_in=b1, x_in=xp, w=res[1]))
        return best

    est = _run("itr_w", cfg, one, bias="heuristic", rng_name="dual_outer")
    return est


def _rho_slope(A, B, a, b, x, rho, rng, n_random=8, scales=(1e-3, 1e-4)):
    """Largest sampled descent rate of f at (a, b, x) in the rho-weighted norm, per inner scale."""
    f0 = max(np.linalg.norm(x - a), np.linalg.norm(x - b))
    ua, ub = unit(x - a), unit(x - b)
    W = np.linspace(0, 1, 11)[:, None]
    out = []
    for sc in scales:
        t = sc * max(f0, 1e-12)
        A1, B1, U = [], [], []
        if ua is not None and ub is not None:
            G = W * ua + (1 - W) * ub
            G = G[np.linalg.norm(G, axis=1) > 1e-15]
            G /= np.linalg.norm(G, axis=1, keepdims=True)
            A1 += [a] * len(G)
            B1 += [b] * len(G)
            U += list(x - t * G)
            a_in = A.project(a + (t / rho) * ua).point
            b_in = B.project(b + (t / rho) * ub).point
            A1 += [a_in, a, a_in]
            B1 += [b, b_in, b_in]
            U += [x, x, x]
        for _ in range(n_random):
            A1.append(A.project(sample_ball(rng, a, t / rho)).point)
            B1.append(B.project(sample_ball(rng, b, t / rho)).point)
            U.append(sample_ball(rng, x, t))
        A1, B1, U = np.array(A1), np.array(B1), np.array(U)
        den = np.maximum(np.linalg.norm(U - x, axis=1),
                         rho * np.maximum(np.linalg.norm(A1 - a, axis=1), np.linalg.norm(B1 - b, axis=1)))
        f1 = np.maximum(np.linalg.norm(U - A1, axis=1), np.linalg.norm(U - B1, axis=1))
        ok = den > 0
        out.append(float(np.max(np.maximum(f0 - f1[ok], 0.0) / den[ok], initial=0.0)))
    return out


def estimate_str1(A, B, xbar, cfg=EstimatorConfig()):
    """Localised subtransversality constant via sampled rho-slopes of f."""
    xbar = as_vector(xbar, A.dim)

    def one(r, rng, i):
        t = _outer(A, B, xbar, r, rng, cfg)
        if t is None:
            return None
        slopes = _rho_slope(A, B, t["a"], t["b"], t["x"], r, rng)
        return slopes[-1], dict(a=t["a"], b=t["b"], x=t["x"], slopes=slopes)

    return _run("str1", cfg, one, bias="heuristic", rng_name="dual_outer")


def check_chain(itr_est, itr_w_est, itr_c_est, str_est, str1_est, slack=0.05, convex=None):
    """0 <= itr <= itr_w <= itr_c <= 1, str1 <= str, and the convex equalities.

    ``itr_c_est`` may be None for nonconvex pairs; links through it are skipped.
    """
    itr, itr_w, st, st1 = (_val(e) for e in (itr_est, itr_w_est, str_est, str1_est))
    rep = CheckReport("chain")
    rep.add("0 <= itr", 0.0, itr)
    rep.add("itr <= itr_w", itr, itr_w + slack)
    rep.add("str1 <= str", st1, st + slack)
    if itr_c_est is not None:
        itr_c = _val(itr_c_est)
        rep.add("itr_w <= itr_c", itr_w + slack, itr_c + 2 * slack)
        rep.add("itr_c <= 1", itr_c + 2 * slack, 1 + 2 * slack)
        if convex is None:
            convex = True
        if convex:
            rep.add("|itr_w - itr_c| <= slack", abs(itr_w - itr_c), slack)
            rep.add("|itr_c - str| <= slack", abs(itr_c - st), slack)
    return rep
