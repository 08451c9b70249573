import numpy as np
import pytest
from hypothesis import given, strategies as st

from topobound import geometry as g
from topobound.condition import c1_norm, delta, family_delta, family_kappa, kappa, subsets
from topobound.errors import SingularFamily, SingularMap
from topobound.experiments import random_trig
from topobound.poly import Polynomial
from topobound.smoothmap import BuiltinMap, ConstantMap, PolynomialMap

# frozen from tests/oracles/condition_circle.py
ORACLE_DELTA = 0.5
ORACLE_C1 = 1.9142135623730950488
ORACLE_KAPPA = 3.8284271247461900976


def _y_minus_half():
    return BuiltinMap("sin", {"p": 1, "shift": -0.5})


def test_circle_oracle_values():
    rep = kappa(_y_minus_half(), g.circle(), 4096)
    assert rep.delta == pytest.approx(ORACLE_DELTA, abs=1e-9)
    assert rep.c1_norm == pytest.approx(ORACLE_C1, abs=1e-6)
    assert rep.kappa == pytest.approx(ORACLE_KAPPA, abs=1e-5)
    assert rep.converged


def test_implicit_circle_polynomial_agrees_with_chart():
    f = PolynomialMap([Polynomial(2, {(0, 1): 1.0, (0, 0): -0.5})])
    rep = kappa(f, g.implicit_circle(), 512)
    assert rep.delta == pytest.approx(ORACLE_DELTA, abs=1e-6)
    assert rep.kappa == pytest.approx(ORACLE_KAPPA, abs=1e-3)


def test_report_json_has_exact_fields():
    rep = kappa(_y_minus_half(), g.circle(), 256)
    assert list(rep.to_json()) == ["c1_norm", "delta", "kappa", "argmax_sample", "argmin_sample",
                                   "resolution", "converged", "refine_history"]
    assert [h[0] for h in rep.refine_history] == [128, 256]
    assert rep.error_bar >= 0


def test_singular_maps_raise():
    with pytest.raises(SingularMap):
        kappa(ConstantMap(0.0), g.circle(), 64)
    # y^2 has singular zeros; refinement stops at width 1e-8 so delta is tiny, not 0
    x = Polynomial.variable(2, 1)
    rep = kappa(PolynomialMap([x * x]), g.implicit_circle(), 256, raise_singular=False)
    assert rep.delta < 1e-7
    assert rep.kappa > 1e8


def test_delta_and_c1_helpers():
    M = g.circle()
    assert delta(_y_minus_half(), M, 1024) == pytest.approx(0.5, abs=1e-9)
    assert c1_norm(_y_minus_half(), M, 1024) <= ORACLE_C1 + 1e-12


@given(st.floats(0.05, 20.0))
def test_kappa_scale_invariant(lam):
    M = g.circle()
    f = BuiltinMap("sin", {"p": 2, "shift": 0.4})
    a = kappa(f, M, 512).kappa
    b = kappa(f.scaled(lam), M, 512).kappa
    assert b == pytest.approx(a, rel=1e-9)


def test_subset_enumeration_order():
    assert subsets(3, 1) == [(0,), (0, 1), (0, 2), (1,), (1, 2), (2,)]
    assert len(subsets(5, 2)) == 25
    assert len(subsets(5, 2, all_subsets=True)) == 31


def test_family_cutoff_equals_all_subsets():
    rng = np.random.default_rng(3)
    for M, N in ((g.circle(), 512), (g.torus_flat(), 24)):
        for _ in range(3):
            F = [random_trig(rng, M.m) for _ in range(4)]
            a = family_delta(F, M, N)
            b = family_delta(F, M, N, all_subsets=True)
            assert a[0] == b[0]
            assert a[1] == b[1]


def test_family_witness_zero_based():
    M = g.circle()
    F = [BuiltinMap("cos", {"shift": 3.0}), BuiltinMap("sin", {"shift": -0.5})]
    fd = family_delta(F, M, 512)
    assert fd.witness == (1,)
    assert fd.delta == pytest.approx(0.5, abs=1e-8)


def test_family_singular():
    M = g.circle()
    F = [BuiltinMap("sin"), BuiltinMap("sin", {"amp": 2.0})]
    with pytest.raises(SingularFamily):
        family_kappa(F, M, 256)
