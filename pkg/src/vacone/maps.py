"""Geometric constraint maps x -> (G(x) - K, x - C), their coderivatives and
the multiplier-image map M(x, y) = G'(x)^T N_K(G(x) - y) + N_C(.)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .expr import PolyMap, as_vector
from .polyhedral import ConeUnion, GenCone, PolyUnion, SmoothConvexBlock, project
from .polyhedral.linalg import dot
from .polyhedral.lp import Optimal, solve_lp
from .polyhedral.normals import limiting_normal_cone


def normal_cone(S: PolyUnion, y) -> ConeUnion:
    """Limiting normal cone of S at y.

    Polyhedral unions go through the exact pattern enumeration.  A single
    smooth convex block uses the convex normal cone spanned by the gradients
    of the constraints active at y, which needs y exactly on the boundary
    (or strictly inside).
    """
    y = as_vector(y)
    if len(y) != S.dim:
        raise ValueError("dimension mismatch")
    if S.whole_space:
        return ConeUnion([GenCone.zero(S.dim)])
    if S.is_polyhedral:
        return limiting_normal_cone(S, y)
    if len(S.blocks) != 1:
        raise NotImplementedError("unions mixing smooth blocks are not supported")
    block: SmoothConvexBlock = S.blocks[0]
    if not block.contains(y):
        raise ValueError("point is not in the set")
    act = block.active(y)
    return ConeUnion([GenCone([block.gradient(j, y) for j in act], (), S.dim).canonical])


@dataclass
class GeometricConstraint:
    G: PolyMap
    K: PolyUnion
    C: PolyUnion

    def __post_init__(self):
        if self.G.codomain_dim != self.K.dim:
            raise ValueError("G maps into a space of different dimension than K")
        if self.C.dim != self.G.domain_dim:
            raise ValueError("C lives in a space of different dimension than x")

    @property
    def n(self):
        return self.G.domain_dim

    @property
    def m(self):
        return self.G.codomain_dim

    @property
    def has_C(self) -> bool:
        return not self.C.whole_space

    def feasible(self, x) -> bool:
        x = as_vector(x)
        return self.K.contains(self.G.eval(x)) and self.C.contains(x)

    def image_union(self, x, y, z=None) -> ConeImageUnion:
        """M(x, y) as an implicit union.  z is None for the decoupled map
        (N_C taken at x), else the coupled map with N_C taken at x - z."""
        x, y = as_vector(x), as_vector(y)
        w = tuple(g - yi for g, yi in zip(self.G.eval(x), y))
        if not self.K.contains(w):
            raise ValueError("G(x) - y is not in K")
        c = x if z is None else tuple(a - b for a, b in zip(x, as_vector(z)))
        if not self.C.contains(c):
            raise ValueError("point is not in C")
        JT = [list(col) for col in zip(*self.G.jacobian(x))] if self.m else [[] for _ in range(self.n)]
        return ConeImageUnion(JT, normal_cone(self.K, w), normal_cone(self.C, c))


class ConeImageUnion:
    """∪_{P,Q} (J^T P + Q) kept implicit; membership is an LP in (λ, ν)."""

    def __init__(self, JT, P: ConeUnion, Q: ConeUnion):
        self.JT = JT
        self.P = P
        self.Q = Q
        self.n = len(JT)
        self.m = P.dim

    def apply(self, lam):
        return tuple(dot(row, lam) for row in self.JT)

    def member(self, xstar):
        return _image_membership(self.JT, self.P, self.Q, as_vector(xstar))

    def contains(self, xstar) -> bool:
        return isinstance(self.member(xstar), Member)


@dataclass(frozen=True)
class Member:
    lam: tuple
    nu: tuple
    branches: tuple


@dataclass(frozen=True)
class NotMember:
    pass


def _image_membership(JT, P: ConeUnion, Q: ConeUnion, xstar):
    n, m = len(JT), P.dim
    if len(xstar) != n:
        raise ValueError("dimension mismatch")
    for pi, pb in enumerate(P.branches):
        pin, peq = pb.facets
        for qi, qb in enumerate(Q.branches):
            qin, qeq = qb.facets
            nv = m + n
            A_eq = [list(JT[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
            b_eq = list(xstar)
            A_ub = [list(h) + [0] * n for h in pin] + [[0] * m + list(h) for h in qin]
            A_eq += [list(h) + [0] * n for h in peq] + [[0] * m + list(h) for h in qeq]
            b_eq += [0] * (len(peq) + len(qeq))
            res = solve_lp(None, A_ub, [0] * len(A_ub), A_eq, b_eq, nvars=nv)
            if isinstance(res, Optimal):
                return Member(tuple(res.point[:m]), tuple(res.point[m:]), (pi, qi))
    return NotMember()


def coderivative_contains(gc: GeometricConstraint, x, y, lam) -> bool:
    """Whether the coderivative at (x, (ỹ, z)) is nonempty in direction (λ̃, z*),
    i.e. λ̃ ∈ N_K(G(x) - ỹ) and z* ∈ N_C(x - z); its value is then
    {G'(x)^T λ̃ + z*}."""
    x = as_vector(x)
    ytil, z = y
    ltil, zstar = lam
    ytil, z, ltil, zstar = as_vector(ytil), as_vector(z), as_vector(ltil), as_vector(zstar)
    w = tuple(g - yi for g, yi in zip(gc.G.eval(x), ytil))
    c = tuple(a - b for a, b in zip(x, z))
    if not gc.K.contains(w) or not gc.C.contains(c):
        raise ValueError("point is not in the graph")
    return normal_cone(gc.K, w).contains(ltil) is not None and normal_cone(gc.C, c).contains(zstar) is not None


def coderivative_value(gc: GeometricConstraint, x, lam, zstar=None):
    x = as_vector(x)
    J = gc.G.jacobian(x)
    out = [sum((J[i][j] * lam[i] for i in range(gc.m)), Fraction(0)) for j in range(gc.n)]
    if zstar is not None:
        out = [a + b for a, b in zip(out, as_vector(zstar))]
    return tuple(out)


def m_map_membership(gc: GeometricConstraint, x, ytil, xstar, z=None):
    """Member(λ̃, ν, branch pair) with x* = G'(x)^T λ̃ + ν exactly, or NotMember."""
    return gc.image_union(x, ytil, z).member(xstar)


def verify_membership(gc: GeometricConstraint, x, ytil, xstar, witness: Member, z=None) -> bool:
    """Re-check a witness by substitution."""
    x = as_vector(x)
    w = tuple(g - yi for g, yi in zip(gc.G.eval(x), as_vector(ytil)))
    c = x if z is None else tuple(a - b for a, b in zip(x, as_vector(z)))
    if coderivative_value(gc, x, witness.lam, witness.nu) != as_vector(xstar):
        return False
    return normal_cone(gc.K, w).contains(witness.lam) is not None and \
        normal_cone(gc.C, c).contains(witness.nu) is not None


def generalized_distance(gc: GeometricConstraint, x, y) -> float:
    """dist(G(x) - y, K)."""
    x, y = as_vector(x), as_vector(y)
    if len(y) != gc.m:
        raise ValueError("dimension mismatch")
    w = tuple(g - yi for g, yi in zip(gc.G.eval(x), y))
    return project(gc.K, w)[1]
