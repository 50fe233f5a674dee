"""Finite unions of closed convex cones."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from ..expr import as_vector
from . import linalg
from .arrangement import distinct_hyperplanes, enumerate_faces
from .cones import GenCone
from .lp import Optimal, solve_lp

EXACT_ARRANGEMENT_LIMIT = 12


@dataclass(frozen=True)
class Member:
    branch: int
    rays_coef: tuple = ()
    lineality_coef: tuple = ()


@dataclass(frozen=True)
class NotMember:
    pass


@dataclass(frozen=True)
class Verified:
    exact: bool
    method: str


@dataclass(frozen=True)
class Counterexample:
    vector: tuple


class ConeUnion:
    """Set-wise union of GenCone branches."""

    def __init__(self, branches, dim=None):
        branches = list(branches)
        if dim is None:
            if not branches:
                raise ValueError("dimension required for an empty union")
            dim = branches[0].dim
        if any(b.dim != dim for b in branches):
            raise ValueError("branches must share the ambient dimension")
        self.branches = tuple(branches)
        self.dim = dim

    @classmethod
    def single(cls, cone: GenCone):
        return cls([cone])

    def __iter__(self):
        return iter(self.branches)

    def __len__(self):
        return len(self.branches)

    def contains(self, v):
        """Index of the first branch containing v, or None."""
        v = as_vector(v)
        for i, b in enumerate(self.branches):
            if b.contains(v):
                return i
        return None

    def deduplicated(self) -> ConeUnion:
        seen, out = set(), []
        for b in self.branches:
            c = b.canonical
            k = c.key()
            if k not in seen:
                seen.add(k)
                out.append(c)
        return ConeUnion(out, self.dim)

    def pruned(self) -> ConeUnion:
        """Drop branches contained in another branch (same set, fewer pieces)."""
        u = self.deduplicated().branches
        keep = []
        for i, b in enumerate(u):
            if any(j != i and b.is_subset(c) for j, c in enumerate(u)):
                continue
            keep.append(b)
        if not keep:
            keep = [GenCone.zero(self.dim)]
        keep.sort(key=lambda c: c.key())
        return ConeUnion(keep, self.dim)

    def simplify(self) -> ConeUnion:
        """Merge branch pairs whose convex sum is already covered by the union."""
        cur = self.pruned()
        changed = True
        while changed and len(cur) > 1:
            changed = False
            bs = list(cur.branches)
            for i in range(len(bs)):
                for j in range(i + 1, len(bs)):
                    s = (bs[i] + bs[j]).canonical
                    res = cone_union_inclusion(ConeUnion([s]), cur, n_samples=0)
                    if isinstance(res, Verified) and res.exact:
                        rest = [b for k, b in enumerate(bs) if k not in (i, j)]
                        cur = ConeUnion(rest + [s], self.dim).pruned()
                        changed = True
                        break
                if changed:
                    break
        return cur

    def same_set(self, other: ConeUnion) -> bool:
        a = cone_union_inclusion(self, other, n_samples=0)
        b = cone_union_inclusion(other, self, n_samples=0)
        if isinstance(a, Verified) and isinstance(b, Verified):
            if a.exact and b.exact:
                return True
            raise RuntimeError("set equality could not be decided exactly")
        return False

    def is_zero(self) -> bool:
        return all(b.is_zero() for b in self.branches)

    def to_json(self):
        return [b.to_json() for b in self.branches]

    def describe(self) -> str:
        return " ∪ ".join("[" + b.describe() + "]" for b in self.branches)

    def __repr__(self):
        return f"ConeUnion({self.describe()})"


def cone_union_membership(U: ConeUnion, v):
    """Member(branch, coefficients) with an exact LP certificate, or NotMember."""
    v = as_vector(v)
    if len(v) != U.dim:
        raise ValueError("dimension mismatch")
    for i, b in enumerate(U.branches):
        gens = list(b.rays) + list(b.lineality)
        if not gens:
            if not any(v):
                return Member(i)
            continue
        nr = len(b.rays)
        A_eq = [[g[k] for g in gens] for k in range(U.dim)]
        nonneg = [True] * nr + [False] * len(b.lineality)
        res = solve_lp(None, (), (), A_eq, list(v), nonneg=nonneg, nvars=len(gens))
        if isinstance(res, Optimal):
            return Member(i, tuple(res.point[:nr]), tuple(res.point[nr:]))
    return NotMember()


def minkowski_sum(U: ConeUnion, V: ConeUnion) -> ConeUnion:
    if U.dim != V.dim:
        raise ValueError("dimension mismatch")
    return ConeUnion([a + b for a in U.branches for b in V.branches], U.dim).pruned()


def _in_union(V: ConeUnion, v) -> bool:
    return any(b.contains(v) for b in V.branches)


def cone_union_inclusion(U: ConeUnion, V: ConeUnion, n_samples: int = 64, seed=0):
    """Decide U ⊆ V.

    Per U-branch: generators are checked first (sound refutation).  If a
    single V-branch holds every generator, containment is exact by
    convexity.  Otherwise, when the V-branches have at most
    EXACT_ARRANGEMENT_LIMIT distinct facet hyperplanes, every face of their
    arrangement inside the U-branch is visited; V-membership is constant on
    such a face, so this too is exact.  Larger instances fall back to random
    conic combinations and report a resolution-qualified verdict.
    """
    if U.dim != V.dim:
        raise ValueError("dimension mismatch")
    rng = random.Random(seed)
    exact = True
    methods = set()
    for b in U.branches:
        gens = b.generators()
        for g in gens:
            if not _in_union(V, g):
                return Counterexample(tuple(g))
        if any(all(c.contains(g) for g in gens) for c in V.branches):
            methods.add("generators")
            continue
        rows = []
        for c in V.branches:
            ineq, eq = c.facets
            rows.extend(ineq)
            rows.extend(eq)
        hyps = distinct_hyperplanes(rows, U.dim)
        if len(hyps) <= EXACT_ARRANGEMENT_LIMIT:
            ineq_b, eq_b = b.facets
            for _, pt in enumerate_faces(hyps, U.dim, ineq_b, eq_b):
                if not _in_union(V, pt):
                    return Counterexample(linalg.primitive(pt))
            methods.add("arrangement")
            continue
        exact = False
        methods.add("sampling")
        for _ in range(n_samples):
            v = [Fraction(0)] * U.dim
            for g in gens:
                w = rng.randint(0, 5)
                if w:
                    v = [a + w * x for a, x in zip(v, g)]
            if not _in_union(V, v):
                return Counterexample(tuple(v))
    return Verified(exact, "+".join(sorted(methods)) or "empty")
