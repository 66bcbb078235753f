import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from transversal.geometry import (
    DimensionMismatch,
    as_vector,
    dual_norm_rho_triple,
    f_max,
    max_norm_pair,
    norm_euclid,
    norm_rho_triple,
    sample_ball,
    sample_sphere,
    unit,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vec3 = arrays(np.float64, 3, elements=finite)


def test_as_vector_accepts_scalars_and_lists():
    assert as_vector(2.0).tolist() == [2.0]
    assert as_vector([1, 2]).dtype == np.float64


@pytest.mark.parametrize("bad", [[], np.zeros(9), [[1, 2]], [np.nan], [np.inf, 0]])
def test_as_vector_rejects(bad):
    with pytest.raises(ValueError):
        as_vector(bad)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        as_vector([1, 2], dim=3)
    with pytest.raises(DimensionMismatch):
        f_max([1, 2], [1, 2, 3], [0, 0])


def test_norms_by_hand():
    assert norm_euclid([3, 4]) == 5.0
    assert norm_rho_triple([1, 0], [0, 2], [0.5, 0], rho=0.5) == 1.0
    assert dual_norm_rho_triple([1, 0], [0, 1], [3, 4], rho=2.0) == 6.0
    assert f_max([1, 0], [0, 2], [0, 0]) == 2.0
    assert max_norm_pair([3, 4], [0, 1]) == 5.0


def test_rho_must_be_positive():
    with pytest.raises(ValueError):
        norm_rho_triple([1], [1], [1], rho=0)


@given(vec3, vec3, vec3, vec3, vec3, vec3, st.floats(0.01, 10))
def test_dual_pairing_bound(x1, x2, x, y1, y2, y, rho):
    # <(y1,y2,y), (x1,x2,x)> <= |(y1,y2,y)|_* |(x1,x2,x)|
    pairing = y1 @ x1 + y2 @ x2 + y @ x
    bound = dual_norm_rho_triple(y1, y2, y, rho) * norm_rho_triple(x1, x2, x, rho)
    assert pairing <= bound * (1 + 1e-9) + 1e-9


@given(vec3, vec3, vec3)
def test_f_max_is_lipschitz_in_max_norm(x1, x2, x):
    d = np.array([0.1, -0.2, 0.3])
    diff = abs(f_max(x1 + d, x2, x - d) - f_max(x1, x2, x))
    assert diff <= 2 * np.linalg.norm(d) + 1e-9


def test_unit():
    assert unit([0, 0]) is None
    assert np.allclose(unit([0, 3]), [0, 1])


def test_samplers_stay_in_ball():
    rng = np.random.default_rng(1)
    c = np.array([1.0, -2.0, 0.5])
    P = sample_ball(rng, c, 0.3, size=2000)
    assert np.all(np.linalg.norm(P - c, axis=1) <= 0.3 + 1e-12)
    # uniform in volume: about 1/8 of the mass lies within half the radius
    frac = np.mean(np.linalg.norm(P - c, axis=1) <= 0.15)
    assert 0.09 < frac < 0.16
    assert abs(np.linalg.norm(sample_sphere(rng, 4)) - 1) < 1e-12
