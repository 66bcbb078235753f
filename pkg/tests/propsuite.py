"""Randomised projection checks shared by the unit tests and the acceptance gate."""

import numpy as np

from transversal.projections import AffineSubspace, Ball, FiniteUnion, Polyhedron, Polytope


def random_set(rng, n, kind):
    if kind == "affine":
        k = int(rng.integers(0, n))
        return AffineSubspace.from_spanning(rng.normal(size=n), rng.normal(size=(k, n)) if k else [])
    if kind == "polyhedron":
        m = int(rng.integers(1, 7))
        N = rng.normal(size=(m, n))
        c = rng.normal(size=n)
        return Polyhedron(N, N @ c + rng.random(m))
    if kind == "ball":
        return Ball(rng.normal(size=n), 0.2 + rng.random())
    if kind == "polytope":
        return Polytope(rng.normal(size=(int(rng.integers(1, 7)), n)))
    if kind == "union":
        return FiniteUnion([random_set(rng, n, k) for k in rng.choice(["affine", "ball", "polyhedron"], 2)])
    raise ValueError(kind)


KINDS = ("affine", "polyhedron", "ball", "polytope", "union")


def projection_violations(n_queries=10_000, seed=0, tol=1e-7):
    """Count failures of idempotence, optimality and nonexpansiveness over random queries.

    Optimality is the variational inequality <x - p, q - p> <= 0 for convex
    sets and minimality over the pieces for unions.
    """
    rng = np.random.default_rng(seed)
    bad = {"idempotence": 0, "optimality": 0, "nonexpansive": 0}
    done = 0
    while done < n_queries:
        n = int(rng.integers(1, 5))
        kind = KINDS[done // 50 % len(KINDS)]
        S = random_set(rng, n, kind)
        probes = [S.project(rng.normal(size=n) * 2).point for _ in range(4)]
        for _ in range(50):
            x, y = rng.normal(size=n) * 3, rng.normal(size=n) * 3
            px = S.project(x).point
            scale = 1 + np.linalg.norm(x)
            if np.linalg.norm(S.project(px).point - px) > tol * scale:
                bad["idempotence"] += 1
            if S.is_convex:
                if any((x - px) @ (q - px) > tol * scale ** 2 for q in probes):
                    bad["optimality"] += 1
                py = S.project(y).point
                if np.linalg.norm(px - py) > np.linalg.norm(x - y) + tol * scale:
                    bad["nonexpansive"] += 1
            else:
                best = min(p.distance(x) for p in S.pieces)
                if abs(np.linalg.norm(x - px) - best) > tol * scale:
                    bad["optimality"] += 1
            done += 1
    return bad, done
