import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import line
from oracles import FROZEN, ap_rate_lines
from transversal.altproj import (
    APTrace,
    InsufficientData,
    RateFit,
    check_joining_conditions,
    check_linear_monotone,
    fit_rate,
    joining_rate,
    one_step_rate,
    run_ap,
    verify_rate_bounds,
)
from transversal.projections import Ball, FiniteUnion


def test_45_lines_rate_matches_oracle(x_axis, diag45):
    tr = run_ap(x_axis, diag45, [1.0, 0.0])
    assert tr.converged
    assert fit_rate(tr).c == pytest.approx(FROZEN["ap_rate_45"], abs=0.02)
    assert one_step_rate(tr) == pytest.approx(0.5, abs=1e-9)


def test_orthogonal_lines_converge_in_one_step(x_axis, y_axis):
    tr = run_ap(x_axis, y_axis, [1.0, 0.0])
    assert tr.converged and len(tr.b_seq) == 1
    assert one_step_rate(tr) < 1e-15
    with pytest.raises(InsufficientData):
        fit_rate(tr)


@given(st.floats(0.2, 1.4))
def test_line_rate_is_cos_squared(theta):
    tr = run_ap(line(0.0), line(theta), [1.0, 0.0], max_iter=60)
    expected = np.cos(theta) ** 2
    assert one_step_rate(tr) == pytest.approx(expected, abs=1e-6)


def test_rate_oracle_agrees_with_closed_form():
    assert ap_rate_lines(np.pi / 3) == pytest.approx(0.25, abs=1e-6)


def test_fit_examples():
    f = fit_rate([1, 0.5, 0.25, 0.125])
    assert isinstance(f, RateFit) and f.c == pytest.approx(0.5)
    assert f.residual == pytest.approx(0, abs=1e-12)
    assert fit_rate([8, 4, 2, 1, 0.5, 0.25]).window == (3, 5)
    with pytest.raises(InsufficientData):
        fit_rate([1, 0.5, 0.25])
    with pytest.raises(InsufficientData):
        fit_rate([1, 0.5, 0.25, 0, 0])


@given(st.integers(0, 2**31))
def test_fejer_monotone_for_convex_pairs(seed):
    rng = np.random.default_rng(seed)
    A = Ball(rng.normal(size=2), 1.0)
    B = Ball(A.center + rng.normal(size=2) * 0.6, 1.0)
    if np.linalg.norm(A.center - B.center) > 1.9:
        return
    tr = run_ap(A, B, rng.normal(size=2) * 3, max_iter=200)
    d = tr.d_int
    assert all(d1 <= d0 + 1e-9 for d0, d1 in zip(d, d[1:]))


def test_trace_consistency(x_axis, diag45):
    tr = run_ap(x_axis, diag45, [2.0, 1.0], max_iter=30, stop_tol=0)
    assert not tr.converged and tr.limit is None
    assert len(tr.x_seq) == len(tr.b_seq) + 1 == len(tr.d_int) == 31
    assert len(tr.z_seq) == 61 and len(tr.step_norms) == 60
    for x, b in zip(tr.x_seq, tr.b_seq):
        assert diag45.contains(b, 1e-9)
        assert np.allclose(b, diag45.project(x).point)
    rows = tr.to_rows()
    assert rows[-1]["b"] is None and rows[0]["k"] == 0


def test_monotone_and_joining_conditions(x_axis, diag45):
    tr = run_ap(x_axis, diag45, [1.0, 0.0])
    assert check_linear_monotone(tr, 0.5 + 1e-9)
    assert not check_linear_monotone(tr, 0.4)
    c = joining_rate(tr)
    assert c == pytest.approx(np.sqrt(0.5), abs=1e-9)
    assert check_joining_conditions(tr, c + 1e-9)
    assert not check_joining_conditions(tr, 0.5)


def test_union_of_lines_joining(axes_union):
    diag = line(np.pi / 5)
    tr = run_ap(axes_union, diag, [0.3, 1.0])
    assert tr.converged
    c = joining_rate(tr)
    assert 0 < c < 1 and check_joining_conditions(tr, c)


def test_verify_rate_bounds():
    assert verify_rate_bounds(0.3827, 0.5, convex=True).passed
    bad = verify_rate_bounds(0.9, 0.9, convex=True)
    assert not bad.passed and "c <= 1 - str^2" in bad.violated
    assert verify_rate_bounds(0.1, 0.8, convex=False).passed
    assert not verify_rate_bounds(0.0, 0.2, convex=False).passed
    skipped = verify_rate_bounds(0.0, 0.2, convex=False, conditions_ok=False)
    assert skipped.passed and "skipped" in skipped.notes


def test_union_trace_uses_first_nearest_on_ties(axes_union):
    tr = run_ap(FiniteUnion([line(0.0), line(np.pi / 2)]), line(np.pi / 4), [1.0, 1.0])
    assert np.allclose(tr.x_seq[0], [1.0, 0.0])
    assert isinstance(tr, APTrace)
