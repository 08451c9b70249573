import numpy as np
import pytest
from hypothesis import given, strategies as st

from topobound import geometry as g
from topobound.errors import CodimensionTooLarge, EvaluationError
from topobound.geometry import SamplePoint, sample
from topobound.poly import Polynomial
from topobound.smoothmap import (BUMP_ZERO_RADIUS, BuiltinMap, BumpReplicationMap, ConstantMap,
                                 Jet1Sample, PolynomialMap, StackedMap, base_bump,
                                 discriminant_distance, fd_tdiff, jet_norm, trig)


def _jet(value, tdiff):
    value, tdiff = np.asarray(value, float), np.asarray(tdiff, float)
    s = np.linalg.svd(tdiff, compute_uv=False)
    pt = SamplePoint(np.zeros(2), None, np.eye(2), 0.0)
    return Jet1Sample(pt, value, tdiff, s)


def test_jet_norm_example():
    j = _jet([3.0, 4.0], [[2.0, 0.0], [0.0, 1.0]])
    assert jet_norm(j) == pytest.approx(7.0)
    assert discriminant_distance(j) == pytest.approx(6.0)


def test_discriminant_distance_needs_k_le_m():
    j = _jet([1.0, 0.0, 0.0], [[1.0], [0.0], [0.0]])
    with pytest.raises(CodimensionTooLarge):
        discriminant_distance(j)


def _fd_cases():
    x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    X = [Polynomial.variable(3, i) for i in range(3)]
    X4 = [Polynomial.variable(4, i) for i in range(4)]
    return [
        (g.circle(), BuiltinMap("sin", {"p": 3})),
        (g.circle(), PolynomialMap([x * y - 0.5 * y])),
        (g.torus_flat(), trig(0.2, [(1.0, (1, 2), 0.3), (0.5, (-1, 1), 1.0)])),
        (g.torus_flat(), PolynomialMap([X4[0] * X4[2] + X4[3], X4[1] - 0.2])),
        (g.implicit_circle(), BuiltinMap("angle_sin", {"p": 5})),
        (g.implicit_sphere(), PolynomialMap([X[0] * X[1] + X[2] ** 2 - 0.3])),
        (g.torus_quartic(), BuiltinMap("height", {"a": [0.3, -0.2, 1.0]})),
        (g.torus_flat(), BumpReplicationMap([[1.0, 1.0]], 0.8, 1, (0, 0), (2 * np.pi,) * 2, (True, True))),
    ]


@pytest.mark.parametrize("M,f", _fd_cases())
def test_analytic_jets_match_finite_differences(M, f):
    S = sample(M, 12)
    J = f.evaluate(S)
    D = fd_tdiff(f, S)
    assert np.max(np.abs(J.tdiff - D)) < 1e-6


def test_bump_profile():
    v, _ = base_bump(np.array([0.0, BUMP_ZERO_RADIUS ** 2, 0.25, 1.0]))
    assert v[0] == pytest.approx(-1.0)
    assert v[1] == pytest.approx(0.0, abs=1e-12)
    assert v[2] == pytest.approx(1.0) and v[3] == pytest.approx(1.0)
    # frozen from an independent symbolic solve: sqrt(1/4 - sqrt(2)/8)
    assert BUMP_ZERO_RADIUS == pytest.approx(0.27059805007309849220, abs=1e-15)


def test_bump_constant_outside_disks():
    M = g.torus_flat()
    f = BumpReplicationMap([[1.0, 1.0], [4.0, 4.0]], 0.5, 2, M.lower, M.upper, M.periodic)
    S = sample(M, 32)
    v = f.values(S)[:, 0]
    far = np.all(np.linalg.norm(S.u[:, None, :] - f.centers[None], axis=2) > 0.5, axis=1)
    assert np.all(v[far] == 1.0)


def test_bump_overlap_rejected():
    with pytest.raises(ValueError):
        BumpReplicationMap([[0.1], [6.2]], 0.3, 2, (0,), (2 * np.pi,), (True,))


def test_chart_builtin_on_implicit_model_fails():
    with pytest.raises(EvaluationError):
        BuiltinMap("sin").evaluate(sample(g.implicit_circle(), 8))


def test_stacked_and_constant():
    M = g.circle()
    S = sample(M, 8)
    F = StackedMap([BuiltinMap("sin"), ConstantMap(2.0)])
    J = F.evaluate(S)
    assert J.values.shape == (8, 2) and np.all(J.values[:, 1] == 2.0)
    assert np.all(J.tdiff[:, 1] == 0.0)


@given(st.floats(0.1, 10.0))
def test_scaling_scales_jets(lam):
    M = g.circle()
    S = sample(M, 16)
    f = BuiltinMap("sin", {"p": 2, "shift": 0.3})
    assert np.allclose(f.scaled(lam).evaluate(S).jet_norms(), lam * f.evaluate(S).jet_norms())
