import pytest
from hypothesis import given, strategies as st

from topobound.bounds import (BoundReport, Formula, Verdict, estimate_constant,
                              mv_intersection_bound, mv_union_bound, reports_to_csv, semialg_bound,
                              smooth_bound, tm_classical, tm_variety)
from topobound.errors import EmptySuite, MissingEntry, SingularMap


def test_closed_forms():
    assert tm_classical(2, 2) == 6
    assert tm_classical(3, 1) == 1
    assert [tm_variety(2, 1, 2, d) for d in (1, 2, 3)] == [4, 8, 12]
    assert tm_variety(3, 2, 4, 1) == 4 * 4 ** 2
    assert tm_variety(2, 2, 7, 3) == 25
    assert tm_classical(40, 50) == 50 * 99 ** 39


def test_closed_form_errors():
    with pytest.raises(ValueError):
        tm_classical(0, 1)
    with pytest.raises(ValueError):
        tm_variety(1, 2, 2, 1)
    with pytest.raises(SingularMap):
        smooth_bound(1.0, float("inf"), 1)
    assert semialg_bound(2.0, 3, 2.0, 2) == pytest.approx(2 * 9 * 4)


@given(st.integers(1, 6), st.integers(1, 6))
def test_variety_bound_reduces_to_classical_shape(n, d):
    # with m = n the variety bound is (2d - 1)^n, never below the classical one divided by d
    assert tm_variety(n, n, 1, d) == (2 * d - 1) ** n


def test_union_bound_two_sets():
    # two arcs covering a circle, meeting in two points
    table = {(0,): (1, 0), (1,): (1, 0), (0, 1): (2, 0)}
    assert mv_union_bound(0, table) == 2
    assert mv_union_bound(1, table) == 0 + 0 + 2


def test_intersection_bound_two_sets():
    table = {(0,): (1, 0), (1,): (1, 0), (0, 1): (1, 1)}
    # m = 1, i = 0: b0(C0) + b0(C1) + C(2, 1) b1(M)
    assert mv_intersection_bound(0, 1, table, b_m_of_M=1) == 1 + 1 + 2
    assert mv_intersection_bound(1, 1, table, b_m_of_M=1) == 1


def test_missing_entry():
    with pytest.raises(MissingEntry):
        mv_union_bound(1, {(0,): (1, 0), (1,): (1, 0)})
    with pytest.raises(KeyError):
        mv_union_bound(1, {(0,): (1, 0), (1,): (1, 0)})


def test_report_verdicts_and_csv():
    r = BoundReport(Formula.TM_VARIETY, {"n": 2, "d": 1}, 4, 2)
    assert r.verdict == Verdict.HOLDS
    assert r.with_measured(5).verdict == Verdict.VIOLATED
    assert BoundReport("SmoothA", {}, 1.5).verdict == Verdict.NOT_COMPARABLE
    text = reports_to_csv([r])
    assert text == "formula,inputs,value,measured,verdict\nTMVariety,n=2;d=1,4,2,Holds\n"


def test_estimate_constant():
    assert estimate_constant([(2, 2.0, 1), (8, 4.0, 1)]) == 2.0
    with pytest.raises(EmptySuite):
        estimate_constant([])
