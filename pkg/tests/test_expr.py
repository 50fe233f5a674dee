from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from vacone.expr import ParseError, PolyMap, Polynomial, jacobian, parse_polynomial

X12 = ["x1", "x2"]


def test_parse_first_component():
    p = parse_polynomial("-x1^2 + x2", X12)
    assert p.terms == {(2, 0): F(-1), (0, 1): F(1)}


def test_parse_zero_and_monomial():
    assert parse_polynomial("0", ["x1"]).terms == {}
    assert parse_polynomial("3/2*x1*x2^3", X12).terms == {(1, 3): F(3, 2)}


def test_parse_parentheses_and_powers():
    p = parse_polynomial("(x1 + 1)^2 - 2*(x1)", ["x1"])
    assert p.terms == {(2,): F(1), (0,): F(1)}
    assert parse_polynomial("x1/2", ["x1"]).terms == {(1,): F(1, 2)}


@pytest.mark.parametrize("text,offset", [("x1 +* x2", 4), ("x1^", 3), ("(x1", 3), ("x1 ^ -1", 5)])
def test_syntax_errors_report_offset(text, offset):
    with pytest.raises(ParseError) as err:
        parse_polynomial(text, X12)
    assert err.value.offset == offset


def test_unknown_variable():
    with pytest.raises(ParseError) as err:
        parse_polynomial("x1 + y", X12)
    assert err.value.offset == 5


def test_eval_examples():
    assert parse_polynomial("-x1^2 + x2", X12).eval([F(-1, 2), 0]) == F(-1, 4)
    assert parse_polynomial("x^3", ["x"]).eval([2]) == 8
    assert parse_polynomial("x1 + x2", X12).eval([F(1, 3), F(2, 3)]) == 1
    with pytest.raises(ValueError):
        parse_polynomial("x1", X12).eval([1])


def test_differentiate_examples():
    assert parse_polynomial("x^3", ["x"]).differentiate(0) == parse_polynomial("3*x^2", ["x"])
    p = parse_polynomial("-x1^2 + x2", X12)
    assert p.differentiate(0) == parse_polynomial("-2*x1", X12)
    assert p.differentiate(1) == Polynomial.constant(X12, 1)


def test_jacobian_examples():
    G = PolyMap.parse(["x", "x^3"], ["x"])
    assert jacobian(G, [0]) == [[1], [0]]
    assert jacobian(G, [1]) == [[1], [3]]
    H = PolyMap.parse(["-x1^2 + x2", "-x2"], X12)
    for k in (1, 7, 100):
        assert jacobian(H, [F(-1, k), 0]) == [[F(2, k), 1], [0, -1]]


def test_jacobian_cross_checked_by_differences():
    H = PolyMap.parse(["-x1^2 + x2", "-x2"], X12)
    x = [-0.25, 0.0]
    J = H.jacobian_float(x)
    h = 1e-6
    for i in range(2):
        for j in range(2):
            xp = list(x); xm = list(x)
            xp[j] += h; xm[j] -= h
            fd = (H.eval_float(xp)[i] - H.eval_float(xm)[i]) / (2 * h)
            assert abs(fd - J[i][j]) < 1e-8


# ---- properties

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def polynomials(draw, n=None):
    n = n or draw(st.integers(1, 4))
    names = [f"x{i + 1}" for i in range(n)]
    nterms = draw(st.integers(0, 6))
    terms = {}
    for _ in range(nterms):
        exps = tuple(draw(st.integers(0, 2)) for _ in range(n))
        if sum(exps) > 4:
            continue
        terms[exps] = draw(rationals)
    return Polynomial(names, terms)


@settings(max_examples=100, deadline=None)
@given(polynomials(), st.data())
def test_gradient_matches_central_differences(p, data):
    pt = [float(data.draw(rationals)) for _ in range(p.nvars)]
    h = 1e-6
    for i, g in enumerate(p.gradient()):
        exact = g.eval_float(pt)
        up = list(pt); dn = list(pt)
        up[i] += h; dn[i] -= h
        fd = (p.eval_float(up) - p.eval_float(dn)) / (2 * h)
        assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


@settings(max_examples=100, deadline=None)
@given(polynomials())
def test_print_parse_roundtrip(p):
    assert parse_polynomial(str(p), p.variables) == p


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(polynomials(n), polynomials(n))))
def test_differentiate_linear(pq):
    p, q = pq
    for i in range(p.nvars):
        assert (p + q).differentiate(i) == p.differentiate(i) + q.differentiate(i)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(polynomials(n), polynomials(n))), st.data())
def test_product_evaluates_pointwise(pq, data):
    p, q = pq
    pt = [data.draw(rationals) for _ in range(p.nvars)]
    assert (p * q).eval(pt) == p.eval(pt) * q.eval(pt)
