"""Set pairs as set-valued mappings: regularity estimators and the transfer bounds.

Three constructions are supported:

* ``PairProduct``: F(x) = (A - x) x (B - x) with the max norm on X^2;
* ``Difference``: G(x1, x2) = {x1 - x2} on A x B with the Euclidean norm on X^2;
* ``GraphPair``: a mapping given by its (affine) graph, turned into the pair
  gph F, X x {ybar} with the max norm on X x Y.

Regularity moduli are not capped at 1 and an empty admissible set gives +inf.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .constants import EstimatorConfig, estimate_str, estimate_tr, sample_infimum
from .geometry import as_vector, sample_ball
from .projections import AffineSubspace, EmptyIntersection, intersect
from .report import CheckReport


@dataclass
class RegularityEstimate:
    kind: str
    value: float
    per_radius: list
    argmin_witness: dict = None
    notes: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class PairProduct:
    A: object
    B: object
    product_norm = "max"


@dataclass(frozen=True, eq=False)
class Difference:
    A: object
    B: object
    product_norm = "euclid"


@dataclass(frozen=True, eq=False)
class GraphPair:
    """F: R^n ⇉ R^m through its graph ``gph`` ⊂ R^(n+m), at (xbar, ybar) ∈ gph."""

    gph: object
    x_dim: int
    xbar: np.ndarray
    ybar: np.ndarray
    product_norm = "max"

    def __post_init__(self):
        object.__setattr__(self, "xbar", as_vector(self.xbar, self.x_dim))
        object.__setattr__(self, "ybar", as_vector(self.ybar, self.gph.dim - self.x_dim))
        if not self.gph.contains(self.point):
            raise ValueError("(xbar, ybar) is not on the graph")

    @classmethod
    def linear(cls, M, xbar=None):
        """Graph of x -> M x."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        m, n = M.shape
        xbar = np.zeros(n) if xbar is None else as_vector(xbar, n)
        gph = AffineSubspace.from_spanning(np.zeros(n + m), np.vstack([np.eye(n), M]).T)
        return cls(gph, n, xbar, M @ xbar)

    @property
    def y_dim(self):
        return self.gph.dim - self.x_dim

    @property
    def point(self):
        return np.concatenate([self.xbar, self.ybar])

    def _slice(self, fixed, value):
        n, m = self.x_dim, self.y_dim
        if fixed == "x":
            base = np.concatenate([value, np.zeros(m)])
            free = np.hstack([np.zeros((m, n)), np.eye(m)])
        else:
            base = np.concatenate([np.zeros(n), value])
            free = np.hstack([np.eye(n), np.zeros((n, m))])
        return intersect(self.gph, AffineSubspace(base, free))

    def dist_to_image(self, x, y):
        """d(y, F(x)); +inf when F(x) is empty."""
        try:
            return self._slice("x", x).distance(np.concatenate([x, y]))
        except EmptyIntersection:
            return math.inf

    def dist_to_preimage(self, x, y):
        """d(x, F^{-1}(y)); +inf when F^{-1}(y) is empty."""
        try:
            return self._slice("y", y).distance(np.concatenate([x, y]))
        except EmptyIntersection:
            return math.inf

    def sets(self):
        """The pair gph F, X x {ybar}."""
        n, m = self.x_dim, self.y_dim
        B = AffineSubspace(np.concatenate([np.zeros(n), self.ybar]),
                           np.hstack([np.eye(n), np.zeros((n, m))]))
        return self.gph, B


# ---------------------------------------------------------------------------
# distances


def diagonal_distance(x1, x2, C):
    """Euclidean distance in X^2 from (x1, x2) to {(c, c) : c ∈ C}."""
    m = (x1 + x2) / 2
    return math.sqrt(2 * C.distance(m) ** 2 + np.linalg.norm(x1 - x2) ** 2 / 2)


def max_norm_distance(S, p, n):
    """Distance from p to an affine set S ⊂ X x Y in max{|x|, |y|}, X = R^n."""
    if not isinstance(S, AffineSubspace):
        raise TypeError("max-norm distances are implemented for affine sets only")
    p = np.asarray(p, dtype=float)
    r = p - S.base
    if S.basis.shape[0] == 0:
        return float(max(np.linalg.norm(r[:n]), np.linalg.norm(r[n:])))
    N = S.complement
    if N.shape[0] == 0:
        return 0.0
    if N.shape[0] == 1:
        nu = N[0]
        return float(abs(nu @ r) / (np.linalg.norm(nu[:n]) + np.linalg.norm(nu[n:])))
    # general codimension: min s subject to |u| <= s, |v| <= s, (u, v) = r - basis^T t
    V = S.basis
    t0 = V @ r
    s0 = float(np.linalg.norm(r - V.T @ t0))

    def parts(z):
        w = r - V.T @ z[:-1]
        return w[:n], w[n:]

    cons = [
        {"type": "ineq", "fun": lambda z: z[-1] ** 2 - parts(z)[0] @ parts(z)[0]},
        {"type": "ineq", "fun": lambda z: z[-1] ** 2 - parts(z)[1] @ parts(z)[1]},
    ]
    res = minimize(lambda z: z[-1], np.append(t0, s0), constraints=cons, method="SLSQP",
                   options={"ftol": 1e-12, "maxiter": 200})
    u, v = parts(res.x)
    return float(min(max(np.linalg.norm(u), np.linalg.norm(v)), s0))


def _max_ball(rng, center, r, n):
    """Uniform in each factor of the max-norm ball B_r(center) ⊂ X x Y."""
    return np.concatenate([sample_ball(rng, center[:n], r), sample_ball(rng, center[n:], r)])


# ---------------------------------------------------------------------------
# estimators


def _pair_sample(A, B, xbar, r, rng):
    """(x1, x2) ∈ A x B near (xbar, xbar); paired by projection in two draws out of three."""
    u = rng.random()
    if u < 1 / 3:
        x1 = A.project(sample_ball(rng, xbar, r)).point
        return x1, B.project(x1).point
    if u < 2 / 3:
        x2 = B.project(sample_ball(rng, xbar, r)).point
        return A.project(x2).point, x2
    return A.project(sample_ball(rng, xbar, r)).point, B.project(sample_ball(rng, xbar, r)).point


def _estimate(kind, tag, cfg, one):
    per_radius, witness = sample_infimum(cfg, tag, one, empty_value=math.inf, clamp=False)
    return RegularityEstimate(kind, per_radius[-1][1], per_radius, witness)


def _ratio(num, den, excl):
    if den <= excl:
        return None
    if math.isinf(den):
        return None if math.isinf(num) else 0.0
    return num / den


def estimate_srg(M, point=None, cfg=EstimatorConfig()):
    """Subregularity modulus of M at its reference point; ``point`` is xbar for set-pair variants."""
    excl = cfg.exclusion_tol
    if isinstance(M, PairProduct):
        A, B = M.A, M.B
        xbar = as_vector(point, A.dim)
        C = intersect(A, B)

        def one(r, rng, i):
            x = sample_ball(rng, xbar, r)
            v = _ratio(max(A.distance(x), B.distance(x)), C.distance(x), excl)
            return None if v is None else (v, {"x": x})

    elif isinstance(M, Difference):
        A, B = M.A, M.B
        xbar = as_vector(point, A.dim)
        C = intersect(A, B)

        def one(r, rng, i):
            x1, x2 = _pair_sample(A, B, xbar, r, rng)
            if np.linalg.norm(x1 - xbar) ** 2 + np.linalg.norm(x2 - xbar) ** 2 >= r * r:
                return None
            v = _ratio(np.linalg.norm(x1 - x2), diagonal_distance(x1, x2, C), excl)
            return None if v is None else (v, {"x1": x1, "x2": x2})

    elif isinstance(M, GraphPair):

        def one(r, rng, i):
            x = sample_ball(rng, M.xbar, r)
            v = _ratio(M.dist_to_image(x, M.ybar), M.dist_to_preimage(x, M.ybar), excl)
            return None if v is None else (v, {"x": x})

    else:
        raise TypeError(f"unsupported mapping {type(M).__name__}")
    return _estimate("srg", "srg", cfg, one)


def estimate_rg(M, point=None, cfg=EstimatorConfig()):
    """Regularity modulus: right-hand sides y are drawn from the same radius schedule as x."""
    excl = cfg.exclusion_tol
    if isinstance(M, PairProduct):
        A, B = M.A, M.B
        xbar = as_vector(point, A.dim)
        zero = np.zeros(A.dim)

        def one(r, rng, i):
            x = sample_ball(rng, xbar, r)
            y1, y2 = sample_ball(rng, zero, r), sample_ball(rng, zero, r)
            At, Bt = A.translate(-y1), B.translate(-y2)
            num = max(At.distance(x), Bt.distance(x))
            try:
                den = intersect(At, Bt).distance(x)
            except EmptyIntersection:
                den = math.inf
            v = _ratio(num, den, excl)
            return None if v is None else (v, {"x": x, "y": (y1, y2)})

    elif isinstance(M, Difference):
        A, B = M.A, M.B
        xbar = as_vector(point, A.dim)
        zero = np.zeros(A.dim)

        def one(r, rng, i):
            x1, x2 = _pair_sample(A, B, xbar, r, rng)
            if np.linalg.norm(x1 - xbar) ** 2 + np.linalg.norm(x2 - xbar) ** 2 >= r * r:
                return None
            y = sample_ball(rng, zero, r)
            try:
                den = diagonal_distance(x1 - y, x2, intersect(A.translate(-y), B))
            except EmptyIntersection:
                den = math.inf
            v = _ratio(np.linalg.norm(x1 - x2 - y), den, excl)
            return None if v is None else (v, {"x1": x1, "x2": x2, "y": y})

    elif isinstance(M, GraphPair):

        def one(r, rng, i):
            x = sample_ball(rng, M.xbar, r)
            y = sample_ball(rng, M.ybar, r)
            v = _ratio(M.dist_to_image(x, y), M.dist_to_preimage(x, y), excl)
            return None if v is None else (v, {"x": x, "y": y})

    else:
        raise TypeError(f"unsupported mapping {type(M).__name__}")
    return _estimate("rg", "rg", cfg, one)


def estimate_graph_str(gp, cfg=EstimatorConfig()):
    """str of the pair gph F, X x {ybar} measured in the max norm on X x Y."""
    A, B = gp.sets()
    C = intersect(A, B)
    n, excl = gp.x_dim, cfg.exclusion_tol

    def one(r, rng, i):
        z = _max_ball(rng, gp.point, r, n)
        dc = max_norm_distance(C, z, n)
        if dc <= excl:
            return None
        return max(max_norm_distance(A, z, n), max_norm_distance(B, z, n)) / dc, {"z": z}

    per_radius, witness = sample_infimum(cfg, "graph_str", one)
    return RegularityEstimate("str", per_radius[-1][1], per_radius, witness)


def estimate_graph_tr(gp, cfg=EstimatorConfig()):
    """tr of the pair gph F, X x {ybar} measured in the max norm on X x Y."""
    A, B = gp.sets()
    n, excl = gp.x_dim, cfg.exclusion_tol
    zero = np.zeros(A.dim)

    def one(r, rng, i):
        z = _max_ball(rng, gp.point, r, n)
        t1, t2 = _max_ball(rng, zero, r, n), _max_ball(rng, zero, r, n)
        At, Bt = A.translate(-t1), B.translate(-t2)
        try:
            C = intersect(At, Bt)
        except EmptyIntersection:
            return 0.0, {"z": z, "empty_intersection": True}
        dc = max_norm_distance(C, z, n)
        if dc <= excl:
            return None
        return max(max_norm_distance(At, z, n), max_norm_distance(Bt, z, n)) / dc, {"z": z}

    per_radius, witness = sample_infimum(cfg, "graph_tr", one)
    return RegularityEstimate("tr", per_radius[-1][1], per_radius, witness)


# ---------------------------------------------------------------------------
# transfer bounds


def lower_bound(v):
    """1 / (2/v + 1), continuous at 0 and +inf."""
    if v <= 0:
        return 0.0
    if math.isinf(v):
        return 1.0
    return 1.0 / (2.0 / v + 1.0)


def graph_upper_bound(v):
    return min(v / 2.0, 1.0)


def difference_upper_bound(v):
    """1 / sqrt(2/v^2 - 1), +inf once v >= sqrt(2)."""
    if v <= 0:
        return 0.0
    q = 2.0 / v ** 2 - 1.0
    return math.inf if q <= 0 else 1.0 / math.sqrt(q)


def _sandwich(rep, reg_name, set_name, value, reg, upper, slack):
    rep.add(f"lower({reg_name}) <= {set_name}", lower_bound(reg) - slack, value)
    rep.add(f"{set_name} <= upper({reg_name})", value, upper(reg) + slack)


def _tr_str(A, B, xbar, cfg, known):
    known = known or {}
    tr = known["tr"] if "tr" in known else estimate_tr(A, B, xbar, cfg).value
    st = known["str"] if "str" in known else estimate_str(A, B, xbar, cfg).value
    return tr, st


def check_P2(A, B, xbar, cfg=EstimatorConfig(), known=None):
    """tr = rg[F] and str = srg[F] for F(x) = (A - x) x (B - x).

    ``known`` may carry already computed ``tr`` and ``str`` values.
    """
    M = PairProduct(A, B)
    tr, st = _tr_str(A, B, xbar, cfg, known)
    rg, srg = estimate_rg(M, xbar, cfg).value, estimate_srg(M, xbar, cfg).value
    rep = CheckReport("P2", notes={"tr": tr, "rg": rg, "str": st, "srg": srg})
    rep.add("|tr - rg| <= slack", abs(tr - rg), cfg.slack)
    rep.add("|str - srg| <= slack", abs(st - srg), cfg.slack)
    return rep


def check_P3(gp, cfg=EstimatorConfig()):
    """Sandwich bounds between rg/srg of F and tr/str of gph F, X x {ybar}."""
    rg, srg = estimate_rg(gp, cfg=cfg).value, estimate_srg(gp, cfg=cfg).value
    tr, st = estimate_graph_tr(gp, cfg).value, estimate_graph_str(gp, cfg).value
    rep = CheckReport("P3", notes={"rg": rg, "srg": srg, "tr": tr, "str": st})
    _sandwich(rep, "rg", "tr", tr, rg, graph_upper_bound, cfg.slack)
    _sandwich(rep, "srg", "str", st, srg, graph_upper_bound, cfg.slack)
    return rep


def check_P2plus(A, B, xbar, cfg=EstimatorConfig(), known=None):
    """Sandwich bounds between rg/srg of the difference map and tr/str."""
    M = Difference(A, B)
    rg, srg = estimate_rg(M, xbar, cfg).value, estimate_srg(M, xbar, cfg).value
    tr, st = _tr_str(A, B, xbar, cfg, known)
    rep = CheckReport("P2plus", notes={"rg": rg, "srg": srg, "tr": tr, "str": st})
    _sandwich(rep, "rg", "tr", tr, rg, difference_upper_bound, cfg.slack)
    _sandwich(rep, "srg", "str", st, srg, difference_upper_bound, cfg.slack)
    return rep
