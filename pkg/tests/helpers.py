"""Shared random generators for property tests."""
from fractions import Fraction as F

from hypothesis import strategies as st

from vacone.polyhedral import GenCone, HPolyhedron, PolyUnion

small = st.integers(-3, 3)


@st.composite
def vectors(draw, dim, lo=-3, hi=3):
    return tuple(F(draw(st.integers(lo, hi))) for _ in range(dim))


@st.composite
def cones(draw, dim=None):
    dim = dim or draw(st.integers(1, 3))
    rays = draw(st.lists(vectors(dim), max_size=4))
    lin = draw(st.lists(vectors(dim), max_size=1))
    return GenCone(rays, lin, dim)


@st.composite
def polyhedron_through(draw, point, max_rows=5, allow_eq=True):
    """Random polyhedron containing ``point``; about half its rows tight there."""
    dim = len(point)
    nrows = draw(st.integers(1, max_rows))
    A, b, eq = [], [], []
    for _ in range(nrows):
        a = [F(draw(small)) for _ in range(dim)]
        if not any(a):
            a[draw(st.integers(0, dim - 1))] = F(1)
        is_eq = allow_eq and draw(st.integers(0, 5)) == 0
        slack = 0 if is_eq else draw(st.sampled_from([0, 0, 0, 1, 2]))
        A.append(a)
        b.append(sum(x * y for x, y in zip(a, point)) + slack)
        eq.append(is_eq)
    return HPolyhedron(A, b, eq, dim)


@st.composite
def union_through(draw, dim=None, max_blocks=3, max_rows=6):
    dim = dim or draw(st.integers(2, 3))
    point = tuple(F(draw(st.integers(-1, 1))) for _ in range(dim))
    nblocks = draw(st.integers(1, max_blocks))
    blocks = []
    for i in range(nblocks):
        # every block holds the base point, except possibly later ones
        if i == 0 or draw(st.integers(0, 3)) > 0:
            blocks.append(draw(polyhedron_through(point, max_rows)))
        else:
            far = tuple(p + F(draw(st.integers(2, 3))) for p in point)
            blocks.append(draw(polyhedron_through(far, max_rows)))
    return PolyUnion(blocks), point


def problem(G, K, f, point, C=None, M=None, variables=None, pid="t"):
    """Problem instance from compact data; K, C, M are lists of blocks of rows."""
    from vacone.problem import load_problem
    n = len(point)
    variables = variables or (["x"] if n == 1 else [f"x{i + 1}" for i in range(n)])
    d = {"schema_version": 1, "id": pid, "variables": variables,
         "objective": {"kind": "polynomial", "expr": f}, "point": [str(v) for v in point]}
    if G is not None:
        d["G"] = G
        d["K"] = {"union": [{"rows": b} for b in K]}
    if C is not None:
        d["C"] = {"union": [{"rows": b} for b in C]}
    if M is not None:
        d["M_explicit"] = {"union": [{"rows": b} for b in M]}
    return load_problem(d)


def catalog_problem(name):
    from vacone.catalog import load_catalog
    return next(e.problem for e in load_catalog() if e.id == name)
