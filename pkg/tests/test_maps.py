from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from helpers import catalog_problem, problem
from vacone.maps import (Member, NotMember, coderivative_contains, generalized_distance,
                         m_map_membership, verify_membership)

SQUARE = problem(["x^2"], [[["1", "0", "le"]]], "x", [0])
# two linear maps into the quadrant complement of Ex-3.4 type
QUAD = problem(["-x1 - x2", "-x1 + x2"], [[["1", "0", "0", "le"], ["0", "1", "0", "le"]]], "x1", [0, 0])


def test_coderivative_of_square():
    gc = SQUARE.gc
    assert coderivative_contains(gc, [0], ([0], [0]), ([1], [0]))
    assert not coderivative_contains(gc, [0], ([0], [0]), ([-1], [0]))


def test_coderivative_off_graph():
    with pytest.raises(ValueError):
        coderivative_contains(SQUARE.gc, [1], ([0], [0]), ([1], [0]))


def test_m_map_examples():
    p = catalog_problem("subregular_not_am_regular")
    assert isinstance(m_map_membership(p.gc, [0, 0], [0, 0], [1, 0]), NotMember)
    assert isinstance(m_map_membership(p.gc, [0, 0], [0, 0], [0, 5]), Member)
    q = catalog_problem("cubic_gacq_fails")
    assert isinstance(m_map_membership(q.gc, [0], [0, 0], [1]), Member)
    assert isinstance(m_map_membership(q.gc, [0], [0, 0], [-1]), NotMember)


def test_zero_is_always_member():
    for p in (SQUARE, QUAD, catalog_problem("mpcc_template")):
        w = m_map_membership(p.gc, p.point, [0] * p.G.codomain_dim, [0] * p.n)
        assert isinstance(w, Member)
        assert verify_membership(p.gc, p.point, [0] * p.G.codomain_dim, [0] * p.n, w)


def test_generalized_distance():
    gc = SQUARE.gc
    for x in (F(1, 2), F(-3), F(1, 10)):
        assert generalized_distance(gc, [x], [0]) == pytest.approx(float(x * x))
    assert generalized_distance(gc, [0], [0]) == 0
    assert generalized_distance(gc, [F(1, 3)], [F(1, 9)]) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(0, 5))
def test_witness_reverifies_and_scales(a, b, t):
    gc = QUAD.gc
    xs = (F(a), F(b))
    w = m_map_membership(gc, [0, 0], [0, 0], xs)
    # the image at the origin is all of -R^2_+ pulled back: x* = -(l1 + l2, l1 - l2)
    expect = -a >= abs(b)
    assert isinstance(w, Member) == expect
    if expect:
        assert verify_membership(gc, [0, 0], [0, 0], xs, w)
        ts = tuple(t * v for v in xs)
        assert isinstance(m_map_membership(gc, [0, 0], [0, 0], ts), Member)


def test_coupled_matches_decoupled_when_x_in_C():
    p = catalog_problem("dam_regular_not_am_regular")
    gc = p.gc
    for xs in ((F(-1),), (F(0),), (F(1),)):
        dec = isinstance(m_map_membership(gc, [0], [0], xs), Member)
        cpl = isinstance(m_map_membership(gc, [0], [0], xs, z=[0]), Member)
        assert dec == cpl
