import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from topobound import geometry as g
from topobound.errors import UnresolvedTopology
from topobound.homology import (BettiVector, CubicalComplex, LevelAtom, Region, betti,
                                betti_elimination, corner_all, mask_to_text, region_betti,
                                z2_rank, zero_set_betti)
from topobound.smoothmap import BuiltinMap


def test_full_torus_and_circle():
    assert betti(CubicalComplex.full((8, 8), (True, True))) == (1, 2, 1)
    assert betti(CubicalComplex.full((8,), (True,))) == (1, 1)
    assert betti(CubicalComplex.full((5, 5), (False, False))) == (1, 0, 0)
    assert betti(CubicalComplex.full((6, 4), (True, False))) == (1, 1, 0)


def test_annulus_mask():
    n = 40
    c = (np.arange(n) + 0.5) / n * 2 - 1
    X, Y = np.meshgrid(c, c, indexing="ij")
    r = np.hypot(X, Y)
    mask = (r > 0.4) & (r < 0.8)
    assert betti(CubicalComplex.from_top_cells(mask, (False, False))) == (1, 1, 0)


def test_boundary_squares_to_zero():
    rng = np.random.default_rng(0)
    c = CubicalComplex.from_top_cells(rng.random((10, 10)) < 0.5, (True, True))
    c.check_boundary()
    D1, D2 = c.boundary(1), c.boundary(2)
    assert ((D1 @ D2).toarray() % 2 == 0).all()


def test_z2_rank_small():
    from scipy import sparse
    M = sparse.csr_matrix(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]]))
    assert z2_rank(M) == 2


@given(arrays(bool, (6, 6)), st.booleans(), st.booleans())
def test_union_find_matches_elimination(mask, p0, p1):
    c = CubicalComplex.from_top_cells(mask, (p0, p1))
    assert betti(c) == betti_elimination(c)


@given(arrays(bool, (12,)), st.booleans())
def test_union_find_matches_elimination_1d(mask, per):
    c = CubicalComplex.from_top_cells(mask, (per,))
    assert betti(c) == betti_elimination(c)


@given(arrays(bool, (5, 5)), arrays(bool, (5, 5)))
def test_set_operations_stay_closed(a, b):
    A = CubicalComplex.from_top_cells(a, (True, True))
    B = CubicalComplex.from_top_cells(b, (True, True))
    for C in (A & B, A | B):
        assert C.is_closed()
        assert betti(C) == betti_elimination(C)


@pytest.mark.parametrize("p", range(1, 11))
def test_sine_zero_set_components(p):
    f = BuiltinMap("sin", {"p": p})
    b = zero_set_betti(f, g.circle(), 512, delta_hat=1.0)
    assert b == (2 * p, 0)


def test_flat_torus_product_zero_set():
    f = BuiltinMap("trig", {"const": 0.0, "terms": [(1.0, (1.0, 0.0), 0.0)]})
    # cos(s) = 0 on the torus: two parallel circles
    assert zero_set_betti(f, g.torus_flat(), 64, delta_hat=1.0) == (2, 2, 0)


def test_unresolved_when_grid_too_coarse():
    f = BuiltinMap("sin", {"p": 40})
    with pytest.raises(UnresolvedTopology):
        zero_set_betti(f, g.circle(), 16, delta_hat=0.05, max_resolution=32)


def test_region_union_glues_half_circles():
    f = BuiltinMap("sin")
    R = Region((f,), ((LevelAtom(0, "ge"),), (LevelAtom(0, "le"),)))
    assert region_betti(R, g.circle(), 256) == (1, 1)
    assert region_betti(Region((f,), ((LevelAtom(0, "ge"),),)), g.circle(), 256) == (1, 0)
    assert region_betti(Region((f,), ()), g.circle(), 64, check=False) == (0, 0)


def test_corner_all_and_text():
    pred = np.array([[True, True, False], [True, True, True]])
    m = corner_all(pred, (False, False))
    assert m.tolist() == [[True, False]]
    assert mask_to_text(m) == "#.\n"


def test_betti_vector_arithmetic():
    a = BettiVector((1, 2, 1))
    assert a.total == 4 and a.euler == 0
    assert a + BettiVector((1,)) == (2, 2, 1)
    assert a[5] == 0
    with pytest.raises(ValueError):
        BettiVector((-1,))
