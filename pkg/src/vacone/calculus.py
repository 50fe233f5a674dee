"""Polyhedral normal-cone calculus: intersection rule, asymptotic stability of
sums of normal cones, the pre-image rule, and a sampling oracle for limiting
normal cones that shares no code path with the arrangement enumeration."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import nnls

from .expr import as_vector
from .maps import m_map_membership
from .polyhedral import (ConeUnion, Counterexample, GenCone, HPolyhedron, PolyUnion,
                         cone_union_inclusion, limiting_normal_cone, minkowski_sum,
                         project_exact, regular_normal_cone)
from .polyhedral.arrangement import distinct_hyperplanes, enumerate_faces
from .polyhedral.linalg import dot, nullspace
from .polyhedral.lp import Infeasible, lp_feasible
from .problem import ProblemInstance
from .verdicts import Proved, Refuted, Unknown


# ------------------------------------------------------------ sampling oracle

@dataclass
class BruteForceConfig:
    radii: tuple = (1e-2, 1e-4, 1e-6)
    samples_per_flat: int = 12
    angle_tol: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        r = list(self.radii)
        if any(b >= a for a, b in zip(r, r[1:])) or r[-1] < 1e-6:
            raise ValueError("radii must decrease strictly and stay >= 1e-6")


@dataclass
class RayCloud:
    """Regular normal cones seen at sampled points near ȳ, plus their unit generators."""
    cones: list = field(default_factory=list)      # exact GenCones
    rays: list = field(default_factory=list)       # unit float vectors
    patterns: int = 0
    samples: int = 0

    def contains(self, v, tol: float = 1e-3) -> bool:
        v = np.asarray([float(a) for a in v])
        nv = np.linalg.norm(v)
        if nv == 0:
            return True
        s = np.sin(tol)
        for c in self.cones:
            gens = c.generators()
            if not gens:
                continue
            A = np.asarray([[float(a) for a in g] for g in gens]).T
            _, r = nnls(A, v)
            if r <= s * nv:
                return True
        return False


def _activity(S: PolyUnion, y):
    out = []
    for B in S.blocks:
        if B.contains(y):
            out.append(tuple(B.active_rows(y)))
        else:
            out.append(None)
    return tuple(out)


def brute_force_limiting_cone(S: PolyUnion, ybar, cfg: BruteForceConfig | None = None) -> RayCloud:
    """Sample S near ȳ along random directions inside every flat spanned by
    the rows active at ȳ, and collect the exact regular normal cones there."""
    cfg = cfg or BruteForceConfig()
    ybar = as_vector(ybar)
    if not S.is_polyhedral:
        raise ValueError("needs polyhedral blocks")
    if not S.contains(ybar):
        raise ValueError("point is not in the set")
    dim = S.dim
    rng = random.Random(cfg.seed)
    rows = []
    for B in S.blocks:
        if B.contains(ybar):
            rows += [B.A[i] for i in B.active_rows(ybar)] + [B.A[i] for i in B.eq_rows()]
    hyps = distinct_hyperplanes(rows, dim)
    far = [B for B in S.blocks if not B.contains(ybar)]
    far_d2 = [project_exact(PolyUnion([B]), ybar)[1] for B in far if not B.is_empty()]
    cloud = RayCloud()
    seen = {}
    points = [ybar]
    for size in range(0, min(dim, len(hyps)) + 1):
        for sub in combinations(range(len(hyps)), size):
            basis = nullspace([hyps[i] for i in sub], dim)
            if not basis:
                continue
            for r in cfg.radii:
                for _ in range(cfg.samples_per_flat):
                    coef = [rng.randint(-20, 20) for _ in basis]
                    d = [sum(c * b[j] for c, b in zip(coef, basis)) for j in range(dim)]
                    if not any(d):
                        continue
                    scale = max(abs(v) for v in d)
                    rr = as_vector([r])[0]
                    for _ in range(12):
                        y = tuple(a + rr * v / scale for a, v in zip(ybar, d))
                        n1 = sum(abs(rr * v / scale) for v in d)
                        if all(n1 * n1 < d2 for d2 in far_d2) and _locally_inactive_ok(S, ybar, y):
                            break
                        rr /= 10
                    else:
                        continue
                    points.append(y)
    for y in points:
        if not S.contains(y):
            continue
        cloud.samples += 1
        key = _activity(S, y)
        if key in seen:
            continue
        c = regular_normal_cone(S, y)
        seen[key] = c
        cloud.cones.append(c)
        for g in c.generators():
            g = np.asarray([float(a) for a in g])
            cloud.rays.append(g / np.linalg.norm(g))
    cloud.patterns = len(seen)
    return cloud


def _locally_inactive_ok(S, ybar, y) -> bool:
    """No row that is slack at ȳ becomes tight or violated at y (keeps y in the local regime)."""
    for B in S.blocks:
        if not B.contains(ybar):
            continue
        for a, b, e in zip(B.A, B.b, B.eq_mask):
            if not e and dot(a, ybar) < b and dot(a, y) >= b:
                return False
    return True


# ------------------------------------------------------------ intersections

def intersect_unions(K: PolyUnion, C: PolyUnion) -> PolyUnion:
    """Pairwise block intersections with empty ones dropped."""
    if not (K.is_polyhedral and C.is_polyhedral):
        raise ValueError("needs polyhedral blocks")
    if K.whole_space:
        return C
    if C.whole_space:
        return K
    blocks = []
    for a in K.blocks:
        for b in C.blocks:
            c = a.intersect(b)
            if not isinstance(lp_feasible(c), Infeasible):
                blocks.append(c)
    if not blocks:
        raise ValueError("the intersection is empty")
    return PolyUnion(blocks)


def _normal(S: PolyUnion, x) -> ConeUnion:
    if S.whole_space:
        return ConeUnion([GenCone.zero(S.dim)])
    return limiting_normal_cone(S, x)


@dataclass
class Holds:
    evidence: dict
    name = "Holds"

    def to_json(self):
        from .verdicts import jsonable
        return {"verdict": self.name, "evidence": jsonable(self.evidence)}


@dataclass
class Violated:
    witness: dict
    name = "Violated"

    def to_json(self):
        from .verdicts import jsonable
        return {"verdict": self.name, "witness": jsonable(self.witness)}


def intersection_rule_check(K: PolyUnion, C: PolyUnion, x):
    """N_{K∩C}(x̄) ⊆ N_K(x̄) + N_C(x̄)."""
    x = as_vector(x)
    if not (K.contains(x) and C.contains(x)):
        raise ValueError("point is not in the intersection")
    if not (K.is_polyhedral and C.is_polyhedral):
        return Unknown("intersection rule needs polyhedral blocks")
    left = _normal(intersect_unions(K, C), x)
    right = minkowski_sum(_normal(K, x), _normal(C, x))
    res = cone_union_inclusion(left, right)
    if isinstance(res, Counterexample):
        return Violated({"vector": res.vector, "left": left, "right": right})
    if res.exact:
        return Holds({"left": left, "right": right, "method": res.method})
    return Unknown("inclusion verified only by sampling")


def nearby_regular_cones(S: PolyUnion, x):
    """The regular normal cones of S at points near x, one per realizable activity pattern."""
    x = as_vector(x)
    if S.whole_space:
        return [GenCone.zero(S.dim)]
    local = [(B, B.active_rows(x), B.eq_rows()) for B in S.blocks if B.contains(x)]
    rows = []
    for B, act, eqs in local:
        rows += [B.A[i] for i in act + eqs]
    hyps = distinct_hyperplanes(rows, S.dim)
    out, seen = [], set()
    for signs, d in enumerate_faces(hyps, S.dim):
        # a witness point on the face, close enough to x that slack rows stay slack
        t = as_vector([1])[0]
        for _ in range(60):
            y = tuple(a + t * v for a, v in zip(x, d))
            if _locally_inactive_ok(S, x, y) and all(
                    B.contains(y) == _face_in_block(B, x, d) for B in S.blocks if B.contains(x)):
                break
            t /= 2
        if not S.contains(y):
            continue
        c = regular_normal_cone(S, y)
        if c.key() not in seen:
            seen.add(c.key())
            out.append(c)
    return out


def _face_in_block(B: HPolyhedron, x, d) -> bool:
    for a, b, e in zip(B.A, B.b, B.eq_mask):
        ad = dot(a, d)
        tight = dot(a, x) == b
        if e and ad != 0:
            return False
        if not e and tight and ad > 0:
            return False
    return True


def asymptotic_stability_check(K: PolyUnion, C: PolyUnion, x):
    """limsup of N_K(x) + N_C(x') as x, x' -> x̄ stays inside N_K(x̄) + N_C(x̄).

    Nearby normal cones take finitely many values (one per activity pattern),
    so all pairwise sums are checked exactly."""
    x = as_vector(x)
    if not (K.contains(x) and C.contains(x)):
        raise ValueError("point is not in the intersection")
    if not (K.is_polyhedral and C.is_polyhedral):
        return Unknown("asymptotic stability needs polyhedral blocks")
    right = minkowski_sum(_normal(K, x), _normal(C, x))
    nk, nc = nearby_regular_cones(K, x), nearby_regular_cones(C, x)
    for a in nk:
        for b in nc:
            s = (a + b).canonical
            res = cone_union_inclusion(ConeUnion([s]), right)
            if isinstance(res, Counterexample):
                return Refuted({"vector": res.vector, "K_cone": a, "C_cone": b, "right": right}, "pattern sums")
            if not res.exact:
                return Unknown("pattern sum inclusion verified only by sampling")
    return Proved({"K_patterns": len(nk), "C_patterns": len(nc), "right": right}, "pattern sums")


def preimage_rule_check(p: ProblemInstance, x=None, M_explicit: PolyUnion | None = None):
    """N_M(x̄) ⊆ M(x̄, 0), with N_M computed from an explicit polyhedral description of M."""
    x = p.point if x is None else as_vector(x)
    M = M_explicit if M_explicit is not None else p.M_explicit
    if M is None:
        return Unknown("the pre-image rule needs an explicit feasible set")
    if not M.contains(x):
        raise ValueError("point is not in M_explicit")
    if not M.is_polyhedral:
        return Unknown("M_explicit has smooth blocks")
    if not p.has_gk:
        return Unknown("the pre-image rule needs a (G, K) description")
    N = _normal(M, x)
    zero = tuple(0 for _ in range(p.G.codomain_dim))
    certs = []
    for bi, b in enumerate(N.branches):
        for g in b.generators():
            res = m_map_membership(p.gc, x, zero, g)
            if not hasattr(res, "lam"):
                return Violated({"generator": g, "normal_cone": N})
            certs.append({"generator": g, "lambda": res.lam, "nu": res.nu})
    return Holds({"normal_cone": N, "memberships": certs})
