"""Vectors, the parametrised product norms on X^3 and the max-distance function f."""

import numpy as np

MAX_DIM = 8


class DimensionMismatch(ValueError):
    pass


def as_vector(x, dim=None):
    """Coerce ``x`` to a finite 1-d float array of dimension 1..8."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if not 1 <= v.size <= MAX_DIM:
        raise ValueError(f"dimension {v.size} outside 1..{MAX_DIM}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.size}")
    return v


def _same_dim(*vs):
    vs = [as_vector(v) for v in vs]
    n = vs[0].size
    for v in vs[1:]:
        if v.size != n:
            raise DimensionMismatch(f"dimensions differ: {n} vs {v.size}")
    return vs


def norm_euclid(x):
    return float(np.linalg.norm(as_vector(x)))


def _check_rho(rho):
    rho = float(rho)
    if not rho > 0:
        raise ValueError("rho must be positive")
    return rho


def norm_rho_triple(x1, x2, x, rho=1.0):
    """max{|x|, rho |x1|, rho |x2|}; rho = 1 is the plain max norm on X^3."""
    rho = _check_rho(rho)
    x1, x2, x = _same_dim(x1, x2, x)
    return max(np.linalg.norm(x), rho * np.linalg.norm(x1), rho * np.linalg.norm(x2))


def dual_norm_rho_triple(x1s, x2s, xs, rho=1.0):
    """Dual of :func:`norm_rho_triple`: |x*| + (|x1*| + |x2*|) / rho."""
    rho = _check_rho(rho)
    x1s, x2s, xs = _same_dim(x1s, x2s, xs)
    return float(np.linalg.norm(xs) + (np.linalg.norm(x1s) + np.linalg.norm(x2s)) / rho)


def f_max(x1, x2, x):
    x1, x2, x = _same_dim(x1, x2, x)
    return float(max(np.linalg.norm(x1 - x), np.linalg.norm(x2 - x)))


def max_norm_pair(y1, y2):
    """The maximum norm g(y1, y2) = max{|y1|, |y2|} on X^2."""
    y1, y2 = _same_dim(y1, y2)
    return float(max(np.linalg.norm(y1), np.linalg.norm(y2)))


def unit(v, tol=1e-15):
    """Normalised copy of ``v`` or None when ``v`` is (numerically) zero."""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv <= tol:
        return None
    return v / nv


def sample_ball(rng, center, radius, size=None):
    """Uniform sample(s) from the closed Euclidean ball."""
    center = np.asarray(center, dtype=float)
    n = center.size
    shape = (n,) if size is None else (size, n)
    g = rng.standard_normal(shape)
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    r = radius * rng.random(() if size is None else (size, 1)) ** (1.0 / n)
    return center + r * g


def sample_sphere(rng, n):
    g = rng.standard_normal(n)
    return g / np.linalg.norm(g)
