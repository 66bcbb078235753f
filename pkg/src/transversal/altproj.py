"""Alternating projections, R-linear rate fitting and the rate/constant bounds."""

from dataclasses import dataclass

import numpy as np

from .geometry import as_vector
from .projections import intersect
from .report import CheckReport


class InsufficientData(ValueError):
    pass


@dataclass
class APTrace:
    x_seq: list
    b_seq: list
    d_int: list
    converged: bool
    stop_tol: float
    limit: np.ndarray = None

    @property
    def z_seq(self):
        """Joining sequence x_0, b_0, x_1, b_1, ..."""
        z = []
        for k, x in enumerate(self.x_seq):
            z.append(x)
            if k < len(self.b_seq):
                z.append(self.b_seq[k])
        return z

    @property
    def step_norms(self):
        z = self.z_seq
        return [float(np.linalg.norm(q - p)) for p, q in zip(z, z[1:])]

    def to_rows(self):
        return [
            {"k": k, "x": x.tolist(), "b": self.b_seq[k].tolist() if k < len(self.b_seq) else None,
             "d_int": self.d_int[k]}
            for k, x in enumerate(self.x_seq)
        ]


def run_ap(A, B, x0, max_iter=1000, stop_tol=1e-12, C=None):
    """x_{k+1} ∈ P_A P_B(x_k) from x0 projected onto A; ties take the first nearest point."""
    x = A.project(as_vector(x0, A.dim)).point
    C = intersect(A, B) if C is None else C
    xs, bs, d = [x], [], [C.distance(x)]
    converged = d[0] < stop_tol
    while not converged and len(bs) < max_iter:
        b = B.project(x).point
        x = A.project(b).point
        bs.append(b)
        xs.append(x)
        d.append(C.distance(x))
        converged = d[-1] < stop_tol
    return APTrace(xs, bs, d, converged, stop_tol, xs[-1].copy() if converged else None)


@dataclass(frozen=True)
class RateFit:
    c: float
    alpha: float
    residual: float
    window: tuple


def fit_rate(trace_or_d):
    """Least-squares fit of log d_k = log alpha + k log c over the last half of the positive values."""
    d = trace_or_d.d_int if isinstance(trace_or_d, APTrace) else list(trace_or_d)
    d = np.asarray(d, dtype=float)
    idx = np.flatnonzero(d > 1e-12)
    if idx.size < 4:
        raise InsufficientData(f"only {idx.size} usable distances")
    tail = idx[idx.size // 2:]
    k, y = tail.astype(float), np.log(d[tail])
    slope, icpt = np.polyfit(k, y, 1)
    resid = float(np.max(np.abs(y - (slope * k + icpt))))
    c = float(np.clip(np.exp(slope), 0.0, 1.0))
    return RateFit(c, float(np.exp(icpt + resid)), resid, (int(tail[0]), int(tail[-1])))


def one_step_rate(trace):
    """Largest observed ratio d_{k+1}/d_k above the noise floor; 0 when the trace collapses at once."""
    floor = 10 * trace.stop_tol
    r = [d1 / d0 for d0, d1 in zip(trace.d_int, trace.d_int[1:]) if d0 > floor]
    return float(min(max(r, default=0.0), 1.0))


def check_linear_monotone(trace, c):
    floor = 10 * trace.stop_tol
    return all(d1 <= c * d0 + 1e-15 for d0, d1 in zip(trace.d_int, trace.d_int[1:]) if d0 > floor)


def check_joining_conditions(trace, c):
    s = trace.step_norms
    floor = 10 * trace.stop_tol
    tol = 1e-12
    mono = all(s[k + 1] <= s[k] + tol for k in range(len(s) - 1) if s[k] > floor)
    contr = all(s[2 * k + 1] <= c * s[2 * k] + tol for k in range(len(s) // 2) if s[2 * k] > floor)
    return mono and contr


def joining_rate(trace):
    """Smallest c for which the contraction half of the joining conditions holds."""
    s = trace.step_norms
    floor = 10 * trace.stop_tol
    r = [s[2 * k + 1] / s[2 * k] for k in range(len(s) // 2) if s[2 * k] > floor]
    return float(min(max(r, default=0.0), 1.0))


def verify_rate_bounds(str_est, fit, convex, slack=0.05, conditions_ok=True):
    """Rate bounds linking the fitted AP rate c and the subtransversality constant."""
    s = getattr(str_est, "value", str_est)
    c = fit.c if isinstance(fit, RateFit) else float(fit)
    rep = CheckReport("rate_bounds", notes={"str": s, "c": c, "convex": convex})
    if convex:
        rep.add("c <= 1 - str^2", c, 1 - s * s + slack)
        rep.add("str >= (1-c)/(3-c)", (1 - c) / (3 - c) - slack, s)
    elif conditions_ok:
        rep.add("str >= (1-c)/(5-c)", (1 - c) / (5 - c) - slack, s)
    else:
        rep.notes["skipped"] = "monotone/joining conditions not verified"
    return rep
