import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from helpers import catalog_problem, union_through
from vacone.calculus import (BruteForceConfig, Holds, asymptotic_stability_check, brute_force_limiting_cone,
                             intersection_rule_check, preimage_rule_check)
from vacone.expr import parse_polynomial
from vacone.polyhedral import HPolyhedron, PolyUnion, SmoothConvexBlock, limiting_normal_cone, normal_cone_convex

H = HPolyhedron.from_rows
MPCC = PolyUnion([H([[-1, 0, 0, "le"], [0, 1, 0, "eq"]]), H([[1, 0, 0, "eq"], [0, -1, 0, "le"]])])
AXES = PolyUnion([H([[0, 1, 0, "eq"]]), H([[1, 0, 0, "eq"]])])
Y = ["y1", "y2"]
DIAG = PolyUnion([H([[1, -1, 0, "eq"]])])


def test_cloud_on_complementarity_set():
    cloud = brute_force_limiting_cone(MPCC, (0, 0))
    for v in [(-1, -1), (-2, -1), (0, 5), (0, -5), (3, 0), (-3, 0)]:
        assert cloud.contains(v)
    assert not cloud.contains((1, 1))
    assert not cloud.contains((1, 2))


def test_cloud_on_convex_block():
    B = H([[1, 1, 0, "le"], [-1, 2, 0, "le"]])
    cloud = brute_force_limiting_cone(PolyUnion([B]), (0, 0))
    N = normal_cone_convex(B, (0, 0))
    for r in cloud.cones:
        for g in r.generators():
            assert N.contains(g)


def test_cloud_interior_is_zero():
    cloud = brute_force_limiting_cone(PolyUnion([H([[1, 0, 1, "le"]])]), (0, 0))
    assert cloud.patterns == 1
    assert all(not c.generators() for c in cloud.cones)
    assert not cloud.contains((1, 0))


def test_cloud_rejects_smooth_blocks_and_bad_radii():
    S = PolyUnion([SmoothConvexBlock([parse_polynomial("y1^2 - y2", Y)], [0, 1])])
    with pytest.raises(ValueError):
        brute_force_limiting_cone(S, (0, 0))
    with pytest.raises(ValueError):
        BruteForceConfig(radii=(1e-2, 1e-1))


@settings(max_examples=15, deadline=None)
@given(union_through())
def test_oracle_agreement(data):
    S, y = data
    N = limiting_normal_cone(S, y)
    cloud = brute_force_limiting_cone(S, y)
    # every sampled regular normal is an exact limiting normal
    for c in cloud.cones:
        for g in c.generators():
            assert N.contains(g) is not None
    # every exact generator is seen by the sampler
    for b in N.branches:
        for g in b.generators():
            assert cloud.contains(g)


# ---- intersection rule

def test_intersection_rule_orthant_split():
    K = PolyUnion([H([[1, 0, 0, "le"]])])
    C = PolyUnion([H([[0, 1, 0, "le"]])])
    r = intersection_rule_check(K, C, (0, 0))
    assert isinstance(r, Holds)
    assert r.evidence["left"].contains((F(2), F(3))) is not None


def test_intersection_rule_axes_and_diagonal():
    r = intersection_rule_check(AXES, DIAG, (0, 0))
    assert isinstance(r, Holds)
    assert r.evidence["left"].contains((F(1), F(7))) is not None


def test_intersection_rule_needs_common_point():
    with pytest.raises(ValueError):
        intersection_rule_check(AXES, PolyUnion([H([[1, 1, 1, "eq"]])]), (0, 0))


def test_asymptotic_stability_examples():
    assert asymptotic_stability_check(AXES, DIAG, (0, 0)).name == "Proved"
    assert asymptotic_stability_check(MPCC, PolyUnion([H([[1, 1, 0, "le"]])]), (0, 0)).name == "Proved"
    S = PolyUnion([SmoothConvexBlock([parse_polynomial("y1^2 + y2^2 - 1", Y)], [0, 0])])
    assert asymptotic_stability_check(S, DIAG, (0, 0)).name == "Unknown"


@settings(max_examples=20, deadline=None)
@given(union_through(dim=2), st.integers(0, 10 ** 6))
def test_stability_implies_intersection_rule(data, seed):
    K, y = data
    rng = random.Random(seed)
    a = [F(rng.randint(-2, 2)) for _ in range(2)]
    if not any(a):
        a[0] = F(1)
    C = PolyUnion([HPolyhedron([a], [sum(u * v for u, v in zip(a, y))], [False], 2)])
    r = asymptotic_stability_check(K, C, y)
    assert r.name == "Proved"
    assert isinstance(intersection_rule_check(K, C, y), Holds)


# ---- pre-image rule

@pytest.mark.parametrize("name", ["am_regular_not_subregular", "cubic_gacq_fails"])
def test_preimage_rule_holds(name):
    r = preimage_rule_check(catalog_problem(name))
    assert isinstance(r, Holds)
    assert r.evidence["normal_cone"].contains((F(1),)) is not None


def test_preimage_rule_affine():
    from helpers import problem
    p = problem(["x1 + x2", "x1 - x2"], [[["1", "0", "0", "le"], ["0", "1", "0", "le"]]], "x1", [0, 0],
                M=[[["1", "1", "0", "le"], ["1", "-1", "0", "le"]]])
    assert isinstance(preimage_rule_check(p), Holds)


def test_preimage_rule_without_M_is_unknown():
    assert preimage_rule_check(catalog_problem("am_not_m_square")).name == "Unknown"
