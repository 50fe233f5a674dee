"""Convex polyhedra, finitely generated cones and the double-description method."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from ..expr import as_fraction, as_vector
from . import linalg
from .linalg import dot

MAX_ROWS = 20
MAX_DIM = 10


class CapacityError(ValueError):
    """Input exceeds the desk-scale limits of the exponential enumerations."""


def check_capacity(nrows: int, dim: int, what="polyhedron"):
    if nrows > MAX_ROWS or dim > MAX_DIM:
        raise CapacityError(
            f"{what} with {nrows} rows in dimension {dim} exceeds the limits "
            f"({MAX_ROWS} rows, dimension {MAX_DIM})")


@dataclass(frozen=True, eq=False)
class HPolyhedron:
    """{y | A_le y <= b_le, A_eq y = b_eq}; ``eq_mask[i]`` marks equality rows."""

    A: tuple
    b: tuple
    eq_mask: tuple
    dim: int

    def __init__(self, A, b, eq_mask=None, dim=None):
        A = tuple(as_vector(r) for r in A)
        b = as_vector(b)
        if dim is None:
            if not A:
                raise ValueError("dimension required for a polyhedron without rows")
            dim = len(A[0])
        if eq_mask is None:
            eq_mask = (False,) * len(A)
        eq_mask = tuple(bool(e) for e in eq_mask)
        if len(b) != len(A) or len(eq_mask) != len(A):
            raise ValueError("inconsistent row counts")
        if any(len(r) != dim for r in A):
            raise ValueError("row length does not match the ambient dimension")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "eq_mask", eq_mask)
        object.__setattr__(self, "dim", dim)

    @classmethod
    def whole_space(cls, dim):
        return cls((), (), (), dim)

    @classmethod
    def from_rows(cls, rows, dim=None):
        """Rows given as ``[a_1, ..., a_d, rhs, "le"|"eq"]``."""
        A, b, eq = [], [], []
        for row in rows:
            *coeffs, rhs, kind = row
            if kind not in ("le", "eq", "ge"):
                raise ValueError(f"row kind must be 'le', 'eq' or 'ge', got {kind!r}")
            coeffs = [as_fraction(c) for c in coeffs]
            rhs = as_fraction(rhs)
            if kind == "ge":
                coeffs, rhs = [-c for c in coeffs], -rhs
            A.append(coeffs)
            b.append(rhs)
            eq.append(kind == "eq")
        return cls(A, b, eq, dim)

    def to_rows(self):
        out = []
        for a, bi, e in zip(self.A, self.b, self.eq_mask):
            out.append([_fstr(v) for v in a] + [_fstr(bi), "eq" if e else "le"])
        return out

    @property
    def nrows(self):
        return len(self.A)

    def is_cone(self) -> bool:
        return all(v == 0 for v in self.b)

    def slack(self, y):
        y = as_vector(y)
        return [bi - dot(a, y) for a, bi in zip(self.A, self.b)]

    def contains(self, y) -> bool:
        if len(y) != self.dim:
            raise ValueError("dimension mismatch")
        for s, e in zip(self.slack(y), self.eq_mask):
            if s < 0 or (e and s != 0):
                return False
        return True

    def contains_float(self, y, tol=1e-12) -> bool:
        for a, bi, e in zip(self.A, self.b, self.eq_mask):
            s = float(bi) - sum(float(ai) * yi for ai, yi in zip(a, y))
            if s < -tol or (e and abs(s) > tol):
                return False
        return True

    def active_rows(self, y):
        """Indices of inequality rows tight at y (equality rows excluded)."""
        return [i for i, (s, e) in enumerate(zip(self.slack(y), self.eq_mask)) if not e and s == 0]

    def le_rows(self):
        return [i for i, e in enumerate(self.eq_mask) if not e]

    def eq_rows(self):
        return [i for i, e in enumerate(self.eq_mask) if e]

    def intersect(self, other: HPolyhedron) -> HPolyhedron:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return HPolyhedron(self.A + other.A, self.b + other.b, self.eq_mask + other.eq_mask, self.dim)

    def is_empty(self) -> bool:
        return self.feasible_point() is None

    def feasible_point(self):
        from .lp import feasible_point
        A_ub = [a for a, e in zip(self.A, self.eq_mask) if not e]
        b_ub = [bi for bi, e in zip(self.b, self.eq_mask) if not e]
        A_eq = [a for a, e in zip(self.A, self.eq_mask) if e]
        b_eq = [bi for bi, e in zip(self.b, self.eq_mask) if e]
        return feasible_point(A_ub, b_ub, A_eq, b_eq, nvars=self.dim)

    def __repr__(self):
        return f"HPolyhedron({self.to_rows()!r})"


def _fstr(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


# ------------------------------------------------------------ double description

def dd_generators(ineq: Sequence, eq: Sequence, dim: int):
    """Generators of {v | ineq @ v <= 0, eq @ v = 0}.

    Returns ``(rays, lineality)``: extreme rays of the pointed part (canonical
    modulo the lineality space) and an RREF basis of the lineality space.
    """
    L = [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
    R: list[list[Fraction]] = []
    processed: list = []
    constraints = [(as_vector(a), False) for a in ineq] + [(as_vector(a), True) for a in eq]
    # equalities first keeps the intermediate cones small
    constraints.sort(key=lambda t: not t[1])
    for a, is_eq in constraints:
        if len(a) != dim:
            raise ValueError("constraint dimension mismatch")
        if not any(a):
            continue
        idx = next((k for k, l in enumerate(L) if dot(a, l) != 0), None)
        if idx is not None:
            l0 = L[idx]
            al0 = dot(a, l0)
            newL = []
            for k, l in enumerate(L):
                if k == idx:
                    continue
                f = dot(a, l) / al0
                newL.append([x - f * y for x, y in zip(l, l0)] if f else l)
            newR = []
            for r in R:
                f = dot(a, r) / al0
                newR.append([x - f * y for x, y in zip(r, l0)] if f else r)
            if not is_eq:
                s = -1 if al0 > 0 else 1
                newR.append([s * x for x in l0])
            L, R = newL, newR
            processed.append(a)
            continue
        vals = [dot(a, r) for r in R]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        zer = [i for i, v in enumerate(vals) if v == 0]
        target = dim - len(L) - 2
        tight = [frozenset(j for j, c in enumerate(processed) if dot(c, r) == 0) for r in R]
        created = []
        for p in pos:
            for q in neg:
                common = tight[p] & tight[q]
                if len(common) < target:
                    continue
                if linalg.rank([processed[j] for j in common], dim) != target:
                    continue
                ap, aq = vals[p], vals[q]
                created.append([ap * x - aq * y for x, y in zip(R[q], R[p])])
        keep = zer if is_eq else zer + neg
        R = [R[i] for i in keep] + created
        processed.append(a)
    if L:
        Lr, piv = linalg.rref(L, dim)
    else:
        Lr, piv = [], []
    rays = []
    seen = set()
    for r in R:
        r = linalg.orth_project_out(r, (Lr, piv)) if Lr else r
        if not any(r):
            continue
        key = linalg.normalize_leading(linalg.primitive(r))
        if key not in seen:
            seen.add(key)
            rays.append(key)
    rays.sort()
    return tuple(rays), tuple(tuple(l) for l in Lr)


@dataclass(frozen=True, eq=False)
class GenCone:
    """cone(rays) + span(lineality)."""

    rays: tuple
    lineality: tuple
    dim: int

    def __init__(self, rays=(), lineality=(), dim=None):
        rays = tuple(as_vector(r) for r in rays)
        lineality = tuple(as_vector(l) for l in lineality)
        if dim is None:
            if rays:
                dim = len(rays[0])
            elif lineality:
                dim = len(lineality[0])
            else:
                raise ValueError("dimension required for the zero cone")
        if any(len(v) != dim for v in rays + lineality):
            raise ValueError("generator dimension mismatch")
        rays = tuple(r for r in rays if any(r))
        lineality = tuple(l for l in lineality if any(l))
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "lineality", lineality)
        object.__setattr__(self, "dim", dim)

    @classmethod
    def zero(cls, dim):
        return cls((), (), dim)

    @classmethod
    def whole_space(cls, dim):
        return cls((), [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)], dim)

    @classmethod
    def from_h(cls, ineq, eq, dim):
        rays, lin = dd_generators(ineq, eq, dim)
        c = cls(rays, lin, dim)
        object.__setattr__(c, "_canonical_flag", True)
        return c

    def generators(self):
        """Rays plus both signs of each lineality vector."""
        out = list(self.rays)
        for l in self.lineality:
            out.append(l)
            out.append(tuple(-x for x in l))
        return out

    @cached_property
    def facets(self):
        """(ineq_rows, eq_rows) with self = {v | ineq v <= 0, eq v = 0}."""
        prays, plin = dd_generators(self.rays, self.lineality, self.dim)
        return prays, plin

    @cached_property
    def canonical(self) -> GenCone:
        if getattr(self, "_canonical_flag", False):
            return self
        ineq, eq = self.facets
        return GenCone.from_h(ineq, eq, self.dim)

    def contains(self, v) -> bool:
        v = as_vector(v)
        if len(v) != self.dim:
            raise ValueError("dimension mismatch")
        ineq, eq = self.facets
        return all(dot(h, v) <= 0 for h in ineq) and all(dot(e, v) == 0 for e in eq)

    def is_zero(self) -> bool:
        c = self.canonical
        return not c.rays and not c.lineality

    def is_subset(self, other: GenCone) -> bool:
        return all(other.contains(g) for g in self.generators())

    def same_as(self, other: GenCone) -> bool:
        return self.dim == other.dim and self.is_subset(other) and other.is_subset(self)

    def key(self):
        c = self.canonical
        return (c.rays, c.lineality)

    def __eq__(self, other):
        if not isinstance(other, GenCone):
            return NotImplemented
        return self.dim == other.dim and self.key() == other.key()

    def __hash__(self):
        return hash((self.dim, self.key()))

    def intersect(self, other: GenCone) -> GenCone:
        i1, e1 = self.facets
        i2, e2 = other.facets
        return GenCone.from_h(list(i1) + list(i2), list(e1) + list(e2), self.dim)

    def __add__(self, other: GenCone) -> GenCone:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return GenCone(self.rays + other.rays, self.lineality + other.lineality, self.dim)

    def image(self, matrix) -> GenCone:
        """Image under v -> matrix @ v."""
        rows = len(matrix)
        apply = lambda v: tuple(dot(row, v) for row in matrix)
        return GenCone([apply(r) for r in self.rays], [apply(l) for l in self.lineality], rows)

    def dimension(self) -> int:
        c = self.canonical
        return linalg.rank(list(c.rays) + list(c.lineality), self.dim)

    def is_simplicial(self) -> bool:
        c = self.canonical
        return linalg.rank(list(c.rays), self.dim) == len(c.rays) if c.rays else True

    def to_json(self):
        c = self.canonical
        return {"rays": [[_fstr(x) for x in r] for r in c.rays],
                "lineality": [[_fstr(x) for x in l] for l in c.lineality]}

    def describe(self) -> str:
        c = self.canonical
        parts = []
        if c.rays:
            parts.append("rays " + "; ".join("(" + ", ".join(_fstr(x) for x in r) + ")" for r in c.rays))
        if c.lineality:
            parts.append("lineality " + "; ".join("(" + ", ".join(_fstr(x) for x in l) + ")" for l in c.lineality))
        return ", ".join(parts) if parts else "{0}"

    def __repr__(self):
        return f"GenCone[{self.describe()}]"


def polar(c: GenCone) -> HPolyhedron:
    """Polar cone of cone(R) + span(L) in inequality form."""
    rows = list(c.rays) + list(c.lineality)
    mask = [False] * len(c.rays) + [True] * len(c.lineality)
    return HPolyhedron(rows, [0] * len(rows), mask, c.dim)


def polar_h(h: HPolyhedron) -> GenCone:
    """Polar of an inequality-form cone: generated by its rows."""
    if not h.is_cone():
        raise ValueError("polar_h expects a cone (zero right-hand side)")
    rays = [a for a, e in zip(h.A, h.eq_mask) if not e]
    lin = [a for a, e in zip(h.A, h.eq_mask) if e]
    return GenCone(rays, lin, h.dim)


def h_to_cone(h: HPolyhedron) -> GenCone:
    """Generators of an inequality-form cone (double description)."""
    if not h.is_cone():
        raise ValueError("expected a cone (zero right-hand side)")
    ineq = [a for a, e in zip(h.A, h.eq_mask) if not e]
    eq = [a for a, e in zip(h.A, h.eq_mask) if e]
    return GenCone.from_h(ineq, eq, h.dim)


def cone_to_h(c: GenCone) -> HPolyhedron:
    ineq, eq = c.facets
    rows = list(ineq) + list(eq)
    return HPolyhedron(rows, [0] * len(rows), [False] * len(ineq) + [True] * len(eq), c.dim)
