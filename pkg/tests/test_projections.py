import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import line
from propsuite import KINDS, projection_violations, random_set
from transversal.projections import (
    AffineSubspace,
    Ball,
    BallLens,
    DykstraIntersection,
    EmptyIntersection,
    EmptySet,
    FiniteUnion,
    Polyhedron,
    Polytope,
    distance,
    intersect,
    min_norm_point,
    project,
    project_polyhedron_exact,
)


def test_affine_basis_must_be_orthonormal():
    with pytest.raises(ValueError):
        AffineSubspace([0, 0], [[1, 1]])
    S = AffineSubspace.from_spanning([0, 0], [[1, 1], [2, 2]])
    assert S.basis.shape == (1, 2)


def test_affine_projection():
    S = line(np.pi / 4)
    r = S.project([2, 0])
    assert np.allclose(r.point, [1, 1])
    assert r.dist == pytest.approx(np.sqrt(2))


def test_polyhedron_projection_onto_quadrant_corner():
    Q = Polyhedron([[1, 0], [0, 1]], [0, 0])
    assert np.allclose(Q.project([1, 2]).point, [0, 0])
    assert np.allclose(Q.project([1, -2]).point, [0, -2])
    assert Q.project([-1, -1]).dist == 0


def test_empty_polyhedron():
    with pytest.raises(EmptySet):
        Polyhedron([[1, 0], [-1, 0]], [-1, -1])


def test_polytope_projection_and_hrep():
    sq = Polytope([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert np.allclose(sq.project([2, 0.5]).point, [1, 0.5])
    assert np.allclose(sq.project([-1, -1]).point, [0, 0])
    N, b = sq.hrep()
    assert len(b) == 4
    seg = Polytope([[0, 0], [1, 1]])
    assert seg.hrep() is None
    assert np.allclose(seg.project([1, 0]).point, [0.5, 0.5])


def test_min_norm_point_of_segment():
    p = min_norm_point(np.array([[1.0, -1.0], [1.0, 1.0]]))
    assert np.allclose(p, [1, 0])


def test_union_ties_report_all_nearest_points():
    U = FiniteUnion([line(0.0), line(np.pi / 2)])
    r = U.project([2, 1])
    assert len(r.nearest) == 1 and np.allclose(r.point, [2, 0])
    r = U.project([1, 1])
    assert len(r.nearest) == 2
    assert {tuple(np.round(p, 12)) for p in r.nearest} == {(1.0, 0.0), (0.0, 1.0)}


def test_nested_union_rejected():
    U = FiniteUnion([line(0.0)])
    with pytest.raises(ValueError):
        FiniteUnion([U, line(1.0)])


def test_intersections():
    C = intersect(line(0.0), line(np.pi / 2))
    assert isinstance(C, AffineSubspace) and C.basis.shape[0] == 0
    assert np.allclose(C.base, 0)
    with pytest.raises(EmptyIntersection):
        intersect(line(0.0), line(0.0, base=(0, 1)))
    H = Polyhedron([[-1, 0]], [-0.5])
    BH = intersect(Ball([0, 0], 1), H)
    assert BH.distance([-1, 0]) == pytest.approx(1.5, abs=1e-8)
    with pytest.raises(EmptyIntersection):
        intersect(Ball([0, 0], 1), Ball([3, 0], 1))


def test_tangent_lens_is_a_point():
    L = intersect(Ball([0, -1], 1), Ball([0, 1], 1))
    assert isinstance(L, BallLens)
    assert np.allclose(L.project([0.3, 0.2]).point, 0, atol=1e-7)


def test_dykstra_agrees_with_exact_polyhedron():
    rng = np.random.default_rng(4)
    B = Ball([0.2, 0.1], 1.0)
    H = Polyhedron([[1, 1], [-1, 2]], [0.5, 0.7])
    D = DykstraIntersection(B, H)
    for _ in range(20):
        x = rng.normal(size=2) * 2
        p = D.project(x).point
        assert B.contains(p, 1e-7) and H.contains(p, 1e-7)
        # no sampled feasible point is closer
        Q = np.array([D.project(rng.normal(size=2)).point for _ in range(5)])
        assert np.all(np.linalg.norm(Q - x, axis=1) >= np.linalg.norm(p - x) - 1e-6)


def test_dykstra_detects_empty():
    with pytest.raises(EmptyIntersection):
        DykstraIntersection(Ball([0, 0], 1), Polyhedron([[-1, 0]], [-2]))


def test_module_helpers():
    S = line(0.0)
    assert np.allclose(project(S, [1, 1]).point, [1, 0])
    assert distance(S, [1, -3]) == 3


@pytest.mark.parametrize("kind", KINDS)
def test_projection_is_idempotent(kind):
    rng = np.random.default_rng(hash(kind) % 2**32)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        S = random_set(rng, n, kind)
        p = S.project(rng.normal(size=n)).point
        assert S.contains(p, 1e-7)
        assert np.allclose(S.project(p).point, p, atol=1e-8)


@given(st.integers(0, 2**31), st.sampled_from(["affine", "polyhedron", "ball", "polytope"]))
def test_convex_projection_is_firmly_nonexpansive(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    S = random_set(rng, n, kind)
    x, y = rng.normal(size=(2, n)) * 2
    px, py = S.project(x).point, S.project(y).point
    # |Px - Py|^2 <= <Px - Py, x - y>
    assert np.linalg.norm(px - py) ** 2 <= (px - py) @ (x - y) + 1e-7


@given(st.integers(0, 2**31))
def test_distance_is_1_lipschitz(seed):
    rng = np.random.default_rng(seed)
    S = random_set(rng, 2, "union")
    x, y = rng.normal(size=(2, 2))
    assert abs(S.distance(x) - S.distance(y)) <= np.linalg.norm(x - y) + 1e-9


@given(st.integers(0, 2**31))
def test_polyhedron_exact_projection_satisfies_kkt(seed):
    rng = np.random.default_rng(seed)
    P = random_set(rng, 3, "polyhedron")
    x = rng.normal(size=3) * 3
    p = project_polyhedron_exact(P, x)
    assert P.contains(p, 1e-8)
    act = P.active(p, 1e-7)
    if len(act):
        lam, *_ = np.linalg.lstsq(P.normals[act].T, x - p, rcond=None)
        assert np.all(lam >= -1e-7)
        assert np.allclose(P.normals[act].T @ lam, x - p, atol=1e-6)
    else:
        assert np.allclose(p, x)


def test_ten_thousand_random_queries():
    bad, n = projection_violations(10_000, seed=0)
    assert n == 10_000
    assert bad == {"idempotence": 0, "optimality": 0, "nonexpansive": 0}
