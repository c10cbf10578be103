import numpy as np
import pytest

from lbcsim.schedule import (CompoundPermutation, cim_route, com_route,
                             compound_p1, compound_p2, im_cim_path, im_route)
from lbcsim.topology import GeometryError, SwitchGeometry

G3 = SwitchGeometry.symmetric(3)

# One configuration period of a 9x9 fabric, frozen as (slot, port) -> index
# maps for the first module of each stage. The COM row at t=0, p=2 is the
# corrected value required by the routing rule.
IM0_EXPECTED = {
    0: {0: 0, 1: 1, 2: 2},
    1: {0: 1, 1: 2, 2: 0},
    2: {0: 2, 1: 0, 2: 1},
}
CIM0_EXPECTED = {
    0: {0: 0, 1: 1, 2: 2},
    1: {0: 1, 1: 2, 2: 0},
    2: {0: 2, 1: 0, 2: 1},
}
COM0_EXPECTED = {
    0: {0: 0, 1: 1, 2: 2},
    1: {0: 2, 1: 0, 2: 1},
    2: {0: 1, 1: 2, 2: 0},
}


def test_period_configuration_matches_frozen_tables():
    for t in range(3):
        assert {s: im_route(s, t, G3) for s in range(3)} == IM0_EXPECTED[t]
        assert {i: cim_route(i, t, G3) for i in range(3)} == CIM0_EXPECTED[t]
        assert {p: com_route(p, t, G3) for p in range(3)} == COM0_EXPECTED[t]


def test_configuration_repeats_every_k_slots():
    for t in range(12):
        for x in range(3):
            assert im_route(x, t, G3) == im_route(x, t + 3, G3)
            assert cim_route(x, t, G3) == cim_route(x, t + 3, G3)
            assert com_route(x, t, G3) == com_route(x, t + 3, G3)


def test_negative_modulus_normalizes_into_range():
    g5 = SwitchGeometry.symmetric(5)
    # -2 mod 5 must be 3, not a negative remainder
    assert com_route(0, 2, g5) == 3
    for t in range(25):
        for p in range(5):
            assert 0 <= com_route(p, t, g5) < 5


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_each_slot_routes_as_a_permutation(k):
    g = SwitchGeometry.symmetric(k)
    for t in range(2 * k):
        assert sorted(im_route(s, t, g) for s in range(g.n)) == list(range(g.m))
        assert sorted(cim_route(i, t, g) for i in range(k)) == list(range(k))
        assert sorted(com_route(p, t, g) for p in range(k)) == list(range(k))


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_staggered_symmetry(k):
    """The composite path from IP(i, s) lands on OM(i) every slot, while the
    central module traversed advances by one per slot."""
    g = SwitchGeometry.symmetric(k)
    for t in range(3 * k):
        for i in range(k):
            for s in range(g.n):
                r, p = im_cim_path(i, s, t, g)
                assert com_route(p, t, g) == i
                assert r == (s + t) % g.m
                r_next, _ = im_cim_path(i, s, t + 1, g)
                assert r_next == (r + 1) % g.m


def test_route_bounds_checked():
    with pytest.raises(GeometryError):
        im_route(3, 0, G3)
    with pytest.raises(GeometryError):
        cim_route(-1, 0, G3)
    with pytest.raises(GeometryError):
        com_route(3, 1, G3)


def test_compound_p1_matches_worked_4x4_matrix():
    g = SwitchGeometry.symmetric(2)
    expected = np.array([
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [0, 1, 1, 0],
        [1, 0, 0, 1],
    ])
    assert (compound_p1(g).entries == expected).all()


def test_compound_p2_matches_worked_4x4_matrix():
    g = SwitchGeometry.symmetric(2)
    expected = np.array([
        [1, 0, 1, 0],
        [1, 0, 1, 0],
        [0, 1, 0, 1],
        [0, 1, 0, 1],
    ])
    assert (compound_p2(g).entries == expected).all()


def test_compound_matrices_k1_are_identity():
    g = SwitchGeometry.symmetric(1)
    assert (compound_p1(g).entries == np.eye(1, dtype=int)).all()
    assert (compound_p2(g).entries == np.eye(1, dtype=int)).all()


def test_compound_p1_k3_against_direct_enumeration():
    g = SwitchGeometry.symmetric(3)
    p1 = compound_p1(g).entries
    # independent enumeration straight from the routing formulas
    expected = np.zeros((9, 9), dtype=int)
    for t in range(3):
        for i in range(3):
            for s in range(3):
                r = (s + t) % 3
                p = (i + t) % 3
                expected[i * 3 + s, r * 3 + p] += 1
    assert (p1 == expected).all()
    assert (p1.sum(axis=0) == 3).all() and (p1.sum(axis=1) == 3).all()


def test_compound_p2_k3_against_direct_enumeration():
    g = SwitchGeometry.symmetric(3)
    p2 = compound_p2(g).entries
    expected = np.zeros((9, 9), dtype=int)
    for t in range(3):
        for r in range(3):
            for p in range(3):
                j = (p - t) % 3
                expected[r * 3 + p, j * 3 + r] += 1
    assert (p2 == expected).all()
    assert (p2.sum(axis=0) == 3).all() and (p2.sum(axis=1) == 3).all()


def test_compound_permutation_validation():
    with pytest.raises(ValueError):
        CompoundPermutation(entries=np.array([[2, 0], [0, 2]]), period=2)
    with pytest.raises(ValueError):
        CompoundPermutation(entries=np.ones((2, 3), dtype=int), period=2)
    with pytest.raises(ValueError):
        CompoundPermutation(entries=np.eye(4, dtype=int), period=2)
