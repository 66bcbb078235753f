"""Brute-force reference values, computed without the package.

Each oracle evaluates the defining ratio on a dense grid with closed-form
distances. Their outputs are frozen in ``FROZEN``; ``test_oracles.py``
recomputes them so the frozen numbers cannot drift from the code that made them.
"""

import numpy as np


def _line_dist(P, theta):
    """Distance from rows of P to the line through 0 at angle theta."""
    return np.abs(P[:, 0] * np.sin(theta) - P[:, 1] * np.cos(theta))


def _annulus(n=801, rmin=0.2, rmax=1.0):
    g = np.linspace(-rmax, rmax, n)
    X, Y = np.meshgrid(g, g)
    P = np.column_stack([X.ravel(), Y.ravel()])
    r = np.linalg.norm(P, axis=1)
    return P[(r >= rmin) & (r <= rmax)]


def lines_str(theta):
    """inf max{d(x,A), d(x,B)} / |x| for A = x-axis, B at angle theta (A ∩ B = {0})."""
    P = _annulus()
    ratio = np.maximum(_line_dist(P, 0.0), _line_dist(P, theta)) / np.linalg.norm(P, axis=1)
    return float(ratio.min())


def lines_str_prime(theta_a, theta_b):
    """inf over x ∈ A of d(x, B) / |x|."""
    t = np.linspace(-1, 1, 20001)
    t = t[np.abs(t) > 1e-3]
    P = np.column_stack([t * np.cos(theta_a), t * np.sin(theta_a)])
    return float((_line_dist(P, theta_b) / np.abs(t)).min())


def lines_tr(theta, delta=0.1, n_shift=21, n_grid=121):
    """inf over translations and points of the ratio in the transversality definition.

    A translation along a line leaves it unchanged, so only normal shifts are scanned.
    The translated lines meet in one point, found by a 2x2 solve.
    """
    na = np.array([0.0, 1.0])
    nb = np.array([-np.sin(theta), np.cos(theta)])
    s = np.linspace(-delta, delta, n_shift)
    g = np.linspace(-delta, delta, n_grid)
    X, Y = np.meshgrid(g, g)
    P = np.column_stack([X.ravel(), Y.ravel()])
    M = np.vstack([na, nb])
    best = np.inf
    for s1 in s:
        for s2 in s:
            # A - x1 = {<na, p> = -s1}, B - x2 = {<nb, p> = -s2}
            c = np.linalg.solve(M, [-s1, -s2])
            da, db = np.abs(P @ na + s1), np.abs(P @ nb + s2)
            dc = np.linalg.norm(P - c, axis=1)
            ok = dc > 1e-9
            best = min(best, float((np.maximum(da, db)[ok] / dc[ok]).min()))
    return best


def min_weighted_normal_sum(U1, U2, n_w=10001):
    """min over unit u1 ∈ U1, u2 ∈ U2 and w ∈ [0, 1] of |w u1 + (1 - w) u2|."""
    w = np.linspace(0, 1, n_w)[:, None]
    best = np.inf
    for u1 in U1:
        for u2 in U2:
            best = min(best, float(np.linalg.norm(w * u1 + (1 - w) * u2, axis=1).min()))
    return best


def line_normals(theta):
    n = np.array([-np.sin(theta), np.cos(theta)])
    return [n, -n]


def ap_rate_lines(theta, n_iter=40):
    """Per-cycle contraction of von Neumann's iteration between two lines through 0."""
    a = np.array([1.0, 0.0])
    b = np.array([np.cos(theta), np.sin(theta)])
    PA, PB = np.outer(a, a), np.outer(b, b)
    x = a.copy()
    d = [np.linalg.norm(x)]
    for _ in range(n_iter):
        x = PA @ (PB @ x)
        d.append(np.linalg.norm(x))
    d = np.array(d)
    return float(np.exp(np.polyfit(np.arange(len(d)), np.log(d), 1)[0]))


def graph_str_max(slope, n=1201):
    """str of gph(x -> slope x) and the x-axis in R x R with max{|x|, |y|}.

    The ratio is positively homogeneous, so the boundary of the unit max-norm
    square suffices. Distances are found by scanning the line parameter.
    """
    g = np.linspace(-1, 1, n)
    one = np.ones(n)
    P = np.vstack([np.column_stack([g, one]), np.column_stack([g, -one]),
                   np.column_stack([one, g]), np.column_stack([-one, g])])
    t = np.linspace(-3, 3, 6001)
    dA = np.min(np.maximum(np.abs(P[:, :1] - t), np.abs(P[:, 1:] - slope * t)), axis=1)
    dB = np.abs(P[:, 1])
    return float(np.maximum(dA, dB).min())


def graph_rg(slope, n=401):
    """rg of x -> slope x on R: inf |y - slope x| / |x - y / slope| over a grid."""
    g = np.linspace(-1, 1, n)
    X, Y = np.meshgrid(g, g)
    num = np.abs(Y - slope * X)
    den = np.abs(X - Y / slope)
    ok = den > 1e-9
    return float((num[ok] / den[ok]).min())


FROZEN = {
    "str_orthogonal": 0.70711,
    "str_45": 0.38268,
    "str_prime_orthogonal": 1.0,
    "str_prime_y_vs_45": 0.70711,
    "tr_orthogonal": 0.70711,
    "tr_45": 0.38268,
    "dual_orthogonal": 0.70711,
    "dual_45": 0.38268,
    "ap_rate_45": 0.5,
    "graph_str_max_identity": 0.33333,
    "graph_str_max_doubling": 0.5,
    "graph_rg_identity": 1.0,
    "graph_rg_doubling": 2.0,
}


def compute_all():
    q = np.pi / 4
    return {
        "str_orthogonal": lines_str(np.pi / 2),
        "str_45": lines_str(q),
        "str_prime_orthogonal": lines_str_prime(0.0, np.pi / 2),
        "str_prime_y_vs_45": lines_str_prime(np.pi / 2, q),
        "tr_orthogonal": lines_tr(np.pi / 2),
        "tr_45": lines_tr(q),
        "dual_orthogonal": min_weighted_normal_sum(line_normals(0.0), line_normals(np.pi / 2)),
        "dual_45": min_weighted_normal_sum(line_normals(0.0), line_normals(q)),
        "ap_rate_45": ap_rate_lines(q),
        "graph_str_max_identity": graph_str_max(1.0),
        "graph_str_max_doubling": graph_str_max(2.0),
        "graph_rg_identity": graph_rg(1.0),
        "graph_rg_doubling": graph_rg(2.0),
    }


if __name__ == "__main__":
    for k, v in compute_all().items():
        print(f"{k:26s} {v:.6f}  frozen {FROZEN[k]}")
