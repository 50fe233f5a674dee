"""Stationarity and constraint-qualification checks at a feasible point.

Everything here is exact: LPs and double description over the rationals.
The asymptotic (AM / dAM) regularity ladder lives in ``regularity``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from .expr import Polynomial, as_vector
from .maps import normal_cone
from .polyhedral import (ConeUnion, Counterexample, GenCone, HPolyhedron, PolyUnion,
                         cone_union_inclusion, h_to_cone, project, project_exact,
                         tangent_cone_convex)
from .polyhedral.linalg import dot
from .polyhedral.lp import Optimal, solve_lp
from .polyhedral.normals import limiting_normal_cone
from .problem import ProblemInstance
from .verdicts import FJMCert, MCert, Proved, Refuted, Unknown

ZERO = Fraction(0)


def _point(p: ProblemInstance, x):
    x = p.point if x is None else as_vector(x)
    if len(x) != p.n:
        raise ValueError("point has the wrong dimension")
    if not p.feasible(x):
        raise ValueError(f"{p.id}: point {[str(v) for v in x]} is not feasible")
    return x


def _transpose(J, n):
    return [[J[i][j] for i in range(len(J))] for j in range(n)]


def reference_parts(p: ProblemInstance, x):
    """(J^T, N_K branches, N_C branches) describing M̃(x, 0) = M(x, (0, 0))."""
    if p.has_gk:
        JT = _transpose(p.G.jacobian(x), p.n)
        return JT, normal_cone(p.K, p.G.eval(x)), normal_cone(p.C, x)
    if p.analytic is None:
        raise ValueError("instance has neither (G, K) nor analytic data")
    return [[] for _ in range(p.n)], ConeUnion([GenCone.zero(0)]), p.analytic["reference_cone"]


def reference_cone(p: ProblemInstance, x) -> ConeUnion:
    """M(x, 0) materialized as a cone union (images of generators)."""
    JT, P, Q = reference_parts(p, x)
    out = []
    for pb in P.branches:
        img_r = [tuple(dot(row, g) for row in JT) for g in pb.rays]
        img_l = [tuple(dot(row, g) for row in JT) for g in pb.lineality]
        for qb in Q.branches:
            out.append(GenCone(img_r + list(qb.rays), img_l + list(qb.lineality), p.n))
    return ConeUnion(out, p.n).pruned()


def _lp_witness(vertices, JT, pb: GenCone, qb: GenCone, n):
    """Find μ in the simplex, λ ∈ pb, ν ∈ qb with Σ μ_i v_i + J^T λ + ν = 0."""
    m = pb.dim
    nv_ = len(vertices)
    nvars = nv_ + m + n
    pin, peq = pb.facets
    qin, qeq = qb.facets
    A_eq, b_eq = [], []
    for i in range(n):
        A_eq.append([v[i] for v in vertices] + list(JT[i]) + [Fraction(int(i == j)) for j in range(n)])
        b_eq.append(0)
    A_eq.append([1] * nv_ + [0] * (m + n))
    b_eq.append(1)
    pad = lambda h, off, size: [0] * off + list(h) + [0] * (nvars - off - size)
    A_eq += [pad(h, nv_, m) for h in peq] + [pad(h, nv_ + m, n) for h in qeq]
    b_eq += [0] * (len(peq) + len(qeq))
    A_ub = [pad(h, nv_, m) for h in pin] + [pad(h, nv_ + m, n) for h in qin]
    nonneg = [True] * nv_ + [False] * (m + n)
    res = solve_lp(None, A_ub, [0] * len(A_ub), A_eq, b_eq, nonneg=nonneg, nvars=nvars)
    if isinstance(res, Optimal):
        mu = res.point[:nv_]
        s = tuple(sum((w * v[i] for w, v in zip(mu, vertices)), ZERO) for i in range(n))
        return s, tuple(res.point[nv_:nv_ + m]), tuple(res.point[nv_ + m:])
    return None


def m_stationarity_check(p: ProblemInstance, x=None):
    """Proved with an MCert iff some x*_f ∈ ∂f(x̄) has -x*_f ∈ M̃(x̄, 0)."""
    x = _point(p, x)
    JT, P, Q = reference_parts(p, x)
    for vi, verts in enumerate(p.objective.subgradients(x)):
        for pi, pb in enumerate(P.branches):
            for qi, qb in enumerate(Q.branches):
                w = _lp_witness(verts, JT, pb, qb, p.n)
                if w is not None:
                    s, lam, nu = w
                    return Proved({"mcert": MCert(lam, nu, (pi, qi), s), "piece": vi}, "exact LP")
    return Refuted({"reason": "no subgradient piece meets -M(x̄,0) on any branch pair"}, "exhaustive LP")


def verify_mcert(p: ProblemInstance, x, cert: MCert) -> bool:
    x = as_vector(x)
    JT, P, Q = reference_parts(p, x)
    img = tuple(s + dot(row, cert.lam) + v for s, row, v in zip(cert.subgradient, JT, cert.nu))
    if any(img):
        return False
    if P.dim and P.contains(cert.lam) is None:
        return False
    if Q.contains(cert.nu) is None:
        return False
    # the subgradient must lie in one of the pieces' hulls
    for verts in p.objective.subgradients(x):
        if _in_hull(cert.subgradient, verts):
            return True
    return False


def _in_hull(s, verts):
    n = len(s)
    A_eq = [[v[i] for v in verts] for i in range(n)] + [[1] * len(verts)]
    res = solve_lp(None, (), (), A_eq, list(s) + [1], nonneg=[True] * len(verts), nvars=len(verts))
    return isinstance(res, Optimal)


def fjm_abnormal_check(p: ProblemInstance, x=None):
    """Proved iff some nonzero (λ̃, ν) has G'(x̄)^T λ̃ + ν = 0 on a branch pair.

    The kernel cone of each branch pair is computed exactly by double
    description; a nonzero generator is the abnormal multiplier.
    """
    x = _point(p, x)
    if not p.has_gk:
        return Unknown("abnormal multipliers need a (G, K) description")
    JT, P, Q = reference_parts(p, x)
    n, m = p.n, p.G.codomain_dim
    d = m + n
    for pi, pb in enumerate(P.branches):
        pin, peq = pb.facets
        for qi, qb in enumerate(Q.branches):
            qin, qeq = qb.facets
            eq = [list(JT[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
            eq += [list(h) + [0] * n for h in peq] + [[0] * m + list(h) for h in qeq]
            ineq = [list(h) + [0] * n for h in pin] + [[0] * m + list(h) for h in qin]
            ker = GenCone.from_h(ineq, eq, d)
            gens = list(ker.rays) + list(ker.lineality)
            if gens:
                g = gens[0]
                lam, nu = g[:m], g[m:]
                s = sum(abs(v) for v in lam)
                lam = tuple(v / s for v in lam)
                nu = tuple(v / s for v in nu)
                return Proved({"fjmcert": FJMCert(ZERO, lam, nu, (pi, qi)),
                               "kernel": ker.to_json()}, "double description")
    return Refuted({"reason": "the coderivative kernel is trivial on every branch pair"}, "double description")


def verify_fjm(p: ProblemInstance, x, cert: FJMCert) -> bool:
    x = as_vector(x)
    JT, P, Q = reference_parts(p, x)
    if not any(cert.lam) or sum(abs(v) for v in cert.lam) != 1:
        return False
    if any(dot(row, cert.lam) + v for row, v in zip(JT, cert.nu)):
        return False
    return P.contains(cert.lam) is not None and Q.contains(cert.nu) is not None


def nnamcq_check(p: ProblemInstance, x=None) -> bool:
    return isinstance(fjm_abnormal_check(p, x), Refuted)


def polyhedrality_check(p: ProblemInstance) -> bool:
    if not p.has_gk:
        return False
    return p.G.is_affine() and p.K.is_polyhedral and p.C.is_polyhedral


# ------------------------------------------------------------ tangent geometry

def _pullback(rows_le, rows_eq, J, n):
    """{d | rows_le J d <= 0, rows_eq J d = 0} in generator form."""
    mul = lambda a: [sum((a[i] * J[i][j] for i in range(len(a))), ZERO) for j in range(n)]
    return GenCone.from_h([mul(a) for a in rows_le], [mul(a) for a in rows_eq], n)


def linearization_cone(p: ProblemInstance, x=None) -> ConeUnion:
    """{d | G'(x̄) d ∈ T_K(G(x̄)), d ∈ T_C(x̄)} as a simplified cone union."""
    x = _point(p, x)
    if not p.has_gk or not p.K.is_polyhedral or not p.C.is_polyhedral:
        raise ValueError("the linearization cone needs polyhedral K and C")
    J = p.G.jacobian(x)
    w = p.G.eval(x)
    n = p.n
    c_parts = []
    for B in p.C.blocks:
        if B.contains(x):
            T = tangent_cone_convex(B, x)
            c_parts.append(([T.A[i] for i in T.le_rows()], [T.A[i] for i in T.eq_rows()]))
    out = []
    for D in p.K.blocks:
        if not D.contains(w):
            continue
        T = tangent_cone_convex(D, w)
        le = [T.A[i] for i in T.le_rows()]
        eq = [T.A[i] for i in T.eq_rows()]
        mul = lambda a: [sum((a[i] * J[i][j] for i in range(len(a))), ZERO) for j in range(n)]
        for cle, ceq in c_parts:
            out.append(GenCone.from_h([mul(a) for a in le] + list(cle), [mul(a) for a in eq] + list(ceq), n))
    return ConeUnion(out, n).simplify()


def tangent_cone_of_union(S: PolyUnion, x) -> ConeUnion:
    x = as_vector(x)
    cones = [h_to_cone(tangent_cone_convex(B, x)) for B in S.blocks if B.contains(x)]
    if not cones:
        raise ValueError("point is not in the set")
    return ConeUnion(cones, S.dim).simplify()


def _compare(U: ConeUnion, V: ConeUnion):
    a = cone_union_inclusion(U, V)
    b = cone_union_inclusion(V, U)
    return a, b


def gacq_check(p: ProblemInstance, x=None, M_explicit: PolyUnion | None = None):
    """T_M(x̄) = L_M(x̄), with T_M taken from an explicit description of M."""
    x = _point(p, x)
    M = M_explicit if M_explicit is not None else p.M_explicit
    if M is None:
        return Unknown("the tangent cone of M is not computable from (G, K); supply M_explicit")
    if not M.contains(x):
        raise ValueError("point is not in M_explicit")
    T = tangent_cone_of_union(M, x)
    L = linearization_cone(p, x)
    a, b = _compare(T, L)
    if isinstance(a, Counterexample):
        return Refuted({"direction": a.vector, "in": "T_M", "not_in": "L_M", "T_M": T, "L_M": L}, "cone inclusion")
    if isinstance(b, Counterexample):
        return Refuted({"direction": b.vector, "in": "L_M", "not_in": "T_M", "T_M": T, "L_M": L}, "cone inclusion")
    if a.exact and b.exact:
        return Proved({"T_M": T, "L_M": L}, "exact cone equality")
    return Unknown("cone equality verified only at sampling resolution")


def _polar_of_union(U: ConeUnion) -> GenCone:
    """Polar of a union = intersection of the branch polars."""
    out = None
    for b in U.branches:
        ineq, eq = b.facets
        c = GenCone(ineq, eq, U.dim)  # polar of b is generated by its facet normals
        out = c if out is None else out.intersect(c)
    return out.canonical


def ggcq_check(p: ProblemInstance, x=None, M_explicit: PolyUnion | None = None):
    """N̂_M(x̄) = L_M(x̄)°."""
    x = _point(p, x)
    M = M_explicit if M_explicit is not None else p.M_explicit
    if M is None:
        return Unknown("the regular normal cone of M needs M_explicit")
    T = tangent_cone_of_union(M, x)
    L = linearization_cone(p, x)
    NM = _polar_of_union(T)
    LP_ = _polar_of_union(L)
    if NM.same_as(LP_):
        return Proved({"regular_normal": NM, "linearization_polar": LP_}, "exact polar comparison")
    bad = next((g for g in NM.generators() if not LP_.contains(g)), None)
    side = "regular_normal"
    if bad is None:
        bad = next(g for g in LP_.generators() if not NM.contains(g))
        side = "linearization_polar"
    return Refuted({"vector": bad, "only_in": side, "regular_normal": NM, "linearization_polar": LP_},
                   "exact polar comparison")


# ------------------------------------------------------------ one-dimensional cells

def taylor_sign(poly: Polynomial, center, side: int) -> int:
    """Sign of a univariate polynomial on (center, center + side*eps) for small eps."""
    if poly.is_zero():
        return 0
    q = poly.shift(center)
    k = min(e[0] for e in q.terms)
    c = q.terms[(k,)]
    s = 1 if c > 0 else -1
    return s * (side ** k)


def _sides_in(S: PolyUnion, x):
    out = []
    for s in (-1, 1):
        if S.whole_space:
            out.append(s)
            continue
        if any(_ray_in_block(B, x, (Fraction(s),)) for B in S.blocks):
            out.append(s)
    return out


def _ray_in_block(B, x, d) -> bool:
    """x + t d ∈ B for all small t > 0 (B a polyhedron)."""
    if not B.contains(x):
        return False
    for a, bi, e in zip(B.A, B.b, B.eq_mask):
        ad = dot(a, d)
        if e and ad != 0:
            return False
        if not e and dot(a, x) == bi and ad > 0:
            return False
    return True


def _normal_along_ray(S: PolyUnion, x, d) -> ConeUnion:
    """Limiting normal cone of a polyhedral union at x + t d for small t > 0."""
    if S.whole_space:
        return ConeUnion([GenCone.zero(S.dim)])
    t = Fraction(1)
    for B in S.blocks:
        for a, bi in zip(B.A, B.b):
            ad, slack = dot(a, d), bi - dot(a, x)
            if ad != 0 and slack != 0 and (slack / ad) > 0:
                t = min(t, abs(slack / ad) / 2)
    y = tuple(a + t * v for a, v in zip(x, d))
    return limiting_normal_cone(S, y)


@dataclass
class Cell:
    label: str
    cone: ConeUnion
    subgradients: list = field(default_factory=list)   # list of vertex lists


def line_cells(p: ProblemInstance, x, decoupled: bool):
    """Finitely many constant values of the multiplier-image map near x̄ (n = 1).

    On each side of x̄ the sign of every image generator G'(x)^T g is fixed,
    so the union ∪_B G'(x)^T B + N_C is constant there.  The cones use the
    limiting normal cone of K at G(x̄), which both covers every nearby normal
    (robustness) and is attained with y = G(x) - G(x̄).
    """
    if p.n != 1:
        raise ValueError("line cells need a one-dimensional problem")
    if not p.K.is_polyhedral or not p.C.is_polyhedral:
        raise ValueError("line cells need polyhedral K and C")
    P = normal_cone(p.K, p.G.eval(x))
    Qbar = normal_cone(p.C, x)
    cells = []
    sides = _sides_in(p.C, x) if decoupled else [-1, 1]
    for s in sides:
        Q = _normal_along_ray(p.C, x, (Fraction(s),)) if decoupled else Qbar
        out = []
        for pb in P.branches:
            rays, lins = [], []
            for g in pb.rays:
                sg = taylor_sign(p.G.transpose_apply_poly(g)[0], x, s)
                if sg:
                    rays.append((Fraction(sg),))
            for g in pb.lineality:
                if taylor_sign(p.G.transpose_apply_poly(g)[0], x, s):
                    lins.append((Fraction(1),))
            for qb in Q.branches:
                out.append(GenCone(rays + list(qb.rays), lins + list(qb.lineality), 1))
        subs = [[g] for g in p.objective.directional_subgradients(x, (Fraction(s),))]
        cells.append(Cell("x>x̄" if s > 0 else "x<x̄", ConeUnion(out, 1).pruned(), subs))
    pt = reference_cone(p, x)
    cells.append(Cell("x=x̄", pt, p.objective.subgradients(x)))
    return cells


def analytic_cells(p: ProblemInstance, decoupled: bool):
    key = "decoupled_cells" if decoupled else "coupled_cells"
    return [Cell(c["label"], c["cone"], [[s] for s in c["subgradients"]]) for c in p.analytic[key]]


def _dist_sq_to_cone(v, cone: GenCone):
    ineq, eq = cone.facets
    rows = list(ineq) + list(eq)
    if not rows:
        return ZERO
    H = HPolyhedron(rows, [0] * len(rows), [False] * len(ineq) + [True] * len(eq), cone.dim)
    return project_exact(PolyUnion([H]), v)[1]


def _polytope_gap_sq(verts, cone: GenCone):
    """Squared distance from -conv(verts) to the cone (exact for a single vertex
    or in one dimension; otherwise the minimum over vertices is an upper bound
    and is not used for refutation)."""
    if len(verts) == 1 or cone.dim == 1:
        if cone.dim == 1 and len(verts) > 1:
            lo = min(v[0] for v in verts)
            hi = max(v[0] for v in verts)
            # -conv = [-hi, -lo]; distance to a 1-D cone
            best = None
            for val in (-hi, -lo):
                d = _dist_sq_to_cone((val,), cone)
                best = d if best is None else min(best, d)
            if cone.contains((Fraction(0),)) and -hi <= 0 <= -lo:
                best = ZERO
            if lo <= 0 <= hi:
                best = ZERO if cone.contains((Fraction(0),)) else best
            return best
        return _dist_sq_to_cone(tuple(-c for c in verts[0]), cone)
    return None


def stationarity_gap(cells):
    """min over cells, subgradients and branches of dist(-x*_f, cone), squared; None if undecidable."""
    best = None
    for c in cells:
        for verts in c.subgradients:
            for b in c.cone.branches:
                g = _polytope_gap_sq(verts, b)
                if g is None:
                    return None
                best = g if best is None else min(best, g)
    return best


def am_stationarity_gap(p: ProblemInstance, x=None, decoupled=False):
    """Refute (d)AM-stationarity when -∂f stays a positive distance from the
    finitely many values of the multiplier-image map near x̄."""
    x = _point(p, x)
    if p.analytic is not None:
        cells = analytic_cells(p, decoupled)
        method = "analytic cells"
    elif p.n == 1 and p.has_gk and p.K.is_polyhedral and p.C.is_polyhedral:
        cells = line_cells(p, x, decoupled)
        method = "one-dimensional cells"
    else:
        return Unknown("AM-stationarity refutation needs one-dimensional data or analytic cells")
    gap = stationarity_gap(cells)
    if gap is None:
        return Unknown("gap not decidable for this subdifferential")
    info = {"gap_squared": gap, "cells": [{"label": c.label, "cone": c.cone, "subgradients": c.subgradients}
                                           for c in cells]}
    if gap > 0:
        return Refuted(info, method)
    return Unknown("gap is zero: refutation impossible; AM-stationarity needs a sequence certificate")


def consequence_check(p: ProblemInstance, x=None):
    """Whether ∂f(x̄) ∩ (-limsup M(x, y)) is nonempty (necessary for AM-stationarity)."""
    x = _point(p, x)
    if p.analytic is not None:
        cells = analytic_cells(p, False)
    elif p.n == 1 and p.has_gk and p.K.is_polyhedral and p.C.is_polyhedral:
        cells = line_cells(p, x, False)
    else:
        return Unknown("limsup of M computable only for one-dimensional data or analytic cells")
    limsup = ConeUnion([b for c in cells for b in c.cone.branches], p.n)
    for verts in p.objective.subgradients(x):
        for v in verts:
            neg = tuple(-a for a in v)
            i = limsup.contains(neg)
            if i is not None:
                return Proved({"subgradient": v, "branch": limsup.branches[i]}, "one-dimensional cells")
    return Refuted({"limsup": limsup}, "one-dimensional cells")


# ------------------------------------------------------------ subregularity probe

@dataclass
class ProbeResult:
    samples: list
    max_by_radius: list
    verdict: str

    def to_json(self):
        from .verdicts import jsonable
        return {"verdict": self.verdict, "max_by_radius": jsonable(self.max_by_radius),
                "samples": jsonable(self.samples)}


def _numeric_dist_to_feasible(p: ProblemInstance, x):
    """dist(x, M) by local minimization over each polyhedral K block."""
    x = np.asarray([float(v) for v in x])
    best = None
    for D in p.K.blocks:
        cons = []
        for a, b, e in zip(D.A, D.b, D.eq_mask):
            af = [float(v) for v in a]
            fun = (lambda u, af=af, b=float(b): b - sum(ai * gi for ai, gi in zip(af, p.G.eval_float(u))))
            cons.append({"type": "eq" if e else "ineq", "fun": fun})
        res = minimize(lambda u: float(np.dot(u - x, u - x)), np.zeros_like(x) + np.asarray([float(v) for v in p.point]),
                       constraints=cons, method="SLSQP", options={"ftol": 1e-16, "maxiter": 300})
        if res.success or res.status in (0, 8):
            u = res.x
            if all(c["fun"](u) >= -1e-10 if c["type"] == "ineq" else abs(c["fun"](u)) <= 1e-10 for c in cons):
                d = float(np.linalg.norm(u - x))
                best = d if best is None else min(best, d)
    return best


def subregularity_probe(p: ProblemInstance, x=None, radii=None, directions=None, M_explicit=None):
    """Empirical ratios dist(x, M) / (dist(G(x), K)^2 + dist(x, C)^2)^(1/2) along x → x̄.

    Diverging ratios are evidence against metric subregularity, never a proof.
    """
    xbar = _point(p, x)
    n = p.n
    radii = radii or [Fraction(1, 10 ** j) for j in range(1, 5)]
    if directions is None:
        directions = []
        for i in range(n):
            for s in (1, -1):
                directions.append(tuple(Fraction(s * int(i == j)) for j in range(n)))
        if n > 1:
            directions += [tuple(Fraction(1) for _ in range(n)), tuple(Fraction(-1) for _ in range(n))]
    M = M_explicit if M_explicit is not None else p.M_explicit
    if M is None and not p.K.is_polyhedral:
        raise ValueError("the subregularity probe needs M_explicit when K has smooth blocks")
    exact = M is not None and M.is_polyhedral and p.K.is_polyhedral and p.C.is_polyhedral
    samples, maxes = [], []
    for t in radii:
        worst = 0.0
        for d in directions:
            pt = tuple(a + t * v for a, v in zip(xbar, d))
            w = p.G.eval(pt)
            if exact:
                num2 = project_exact(M, pt)[1]
                den2 = project_exact(p.K, w)[1] + (ZERO if p.C.whole_space else project_exact(p.C, pt)[1])
                ratio = 0.0 if num2 == 0 else (float("inf") if den2 == 0 else float((num2 / den2)) ** 0.5)
            else:
                if M is not None:
                    num = project(M, [float(v) for v in pt])[1]
                else:
                    num = _numeric_dist_to_feasible(p, pt)
                    if num is None:
                        continue
                den = (project(p.K, [float(v) for v in w])[1] ** 2 +
                       (0.0 if p.C.whole_space else project(p.C, [float(v) for v in pt])[1] ** 2)) ** 0.5
                ratio = 0.0 if num < 1e-12 else (float("inf") if den == 0 else num / den)
            samples.append({"t": t, "direction": d, "ratio": ratio})
            worst = max(worst, ratio)
        maxes.append({"t": t, "max_ratio": worst})
    vals = [m["max_ratio"] for m in maxes]
    if len(vals) >= 2 and all(b > a for a, b in zip(vals, vals[1:])) and vals[-1] >= 10 * max(vals[0], 1e-300):
        verdict = "diverges"
    elif all(v == 0 for v in vals):
        verdict = "zero"
    else:
        verdict = "bounded"
    return ProbeResult(samples, maxes, verdict)


# ------------------------------------------------------------ sequence replay

def _limit_of(num: Polynomial, den: Polynomial):
    """lim_{k->inf} num(k)/den(k): a Fraction, or None when it diverges."""
    if num.is_zero():
        return ZERO
    dn, dd = num.degree, den.degree
    if dn < dd:
        return ZERO
    if dn > dd:
        return None
    lead = lambda q, d: q.terms[(d,)]
    return lead(num, dn) / lead(den, dd)


def sequence_limit(terms):
    out = []
    for num, den in terms:
        v = _limit_of(num, den)
        if v is None:
            return None
        out.append(v)
    return tuple(out)


def replay_am_sequence(p: ProblemInstance, item, x=None):
    """Exact check of ε_k = x*_f(x_k) + G'(x_k)^T λ_k + ν_k with λ_k ∈ N_K(G(x_k) - y_k)
    and ν_k ∈ N_C(x_k - z_k) (z_k = 0 when absent) for every listed k, plus
    the symbolic limits x_k -> x̄, y_k -> 0, ε_k -> 0."""
    from .problem import eval_sequence
    x = p.point if x is None else as_vector(x)
    rows = []
    ok = True
    for k in item["ks"]:
        xk = eval_sequence(item["x"], k)
        yk = eval_sequence(item["y"], k)
        lam = eval_sequence(item["lambda"], k)
        eps = eval_sequence(item["eps"], k)
        nu = eval_sequence(item["nu"], k) if "nu" in item else tuple(ZERO for _ in xk)
        zk = eval_sequence(item["z"], k) if "z" in item else tuple(ZERO for _ in xk)
        w = tuple(g - v for g, v in zip(p.G.eval(xk), yk))
        c = tuple(a - b for a, b in zip(xk, zk))
        good = p.K.contains(w) and p.C.contains(c)
        if good:
            good = normal_cone(p.K, w).contains(lam) is not None and normal_cone(p.C, c).contains(nu) is not None
        if good:
            J = p.G.jacobian(xk)
            jt = [sum((J[i][j] * lam[i] for i in range(len(lam))), ZERO) for j in range(p.n)]
            good = False
            for verts in p.objective.subgradients(xk):
                for s in verts:
                    r = tuple(si + a + b - e for si, a, b, e in zip(s, jt, nu, eps))
                    if not any(r):
                        good = True
                        break
                if good:
                    break
        rows.append({"k": k, "ok": good})
        ok = ok and good
    lx, ly, le = sequence_limit(item["x"]), sequence_limit(item["y"]), sequence_limit(item["eps"])
    limits_ok = lx == tuple(x) and ly is not None and not any(ly) and le is not None and not any(le)
    if "z" in item:
        lz = sequence_limit(item["z"])
        limits_ok = limits_ok and lz is not None and not any(lz)
    return {"ok": ok and limits_ok, "records": rows, "limits_ok": limits_ok}


def replay_m_membership(p: ProblemInstance, item, x=None):
    """x* ∈ M(x_k, y_k) exactly for every listed k (coupled map when z is given)."""
    from .maps import verify_membership
    from .problem import eval_sequence
    gc = p.gc
    rows, ok = [], True
    for k in item["ks"]:
        xk = eval_sequence(item["x"], k)
        yk = eval_sequence(item["y"], k)
        zk = eval_sequence(item["z"], k) if "z" in item else None
        xs = eval_sequence(item["xstar"], k)
        res = gc.image_union(xk, yk, zk).member(xs)
        good = hasattr(res, "lam") and verify_membership(gc, xk, yk, xs, res, zk)
        if good and "lambda" in item:
            lam = eval_sequence(item["lambda"], k)
            w = tuple(g - v for g, v in zip(p.G.eval(xk), yk))
            good = tuple(p.G.transpose_apply(xk, lam)) == xs and normal_cone(p.K, w).contains(lam) is not None
        rows.append({"k": k, "ok": good, "lambda": res.lam if hasattr(res, "lam") else None})
        ok = ok and good
    return {"ok": ok, "records": rows}


def am_stationarity_certificate(p: ProblemInstance, x=None):
    """'Certified' when a stored sequence replays exactly, else None."""
    for it in p.replay:
        if it["kind"] == "am_sequence":
            r = replay_am_sequence(p, it, x)
            if r["ok"]:
                return r
    return None


# ------------------------------------------------------------ trace classification

@dataclass
class TraceRecord:
    k: float
    x: list
    y: list
    lam: list
    nu: list
    eps: list
    inner_tol: float
    branch: tuple
    status: str = "ok"


@dataclass
class AMTrace:
    records: list
    xbar: tuple
    status: str = "complete"


@dataclass
class MLimit:
    cert: MCert

    name = "MLimit"

    def to_json(self):
        from .verdicts import jsonable
        return {"classification": self.name, "mcert": jsonable(self.cert)}


@dataclass
class Abnormal:
    lam: tuple
    nu: tuple

    name = "Abnormal"

    def to_json(self):
        from .verdicts import jsonable
        return {"classification": self.name, "lambda": jsonable(self.lam), "nu": jsonable(self.nu)}


@dataclass
class Inconclusive:
    reason: str

    name = "Inconclusive"

    def to_json(self):
        return {"classification": self.name, "reason": self.reason}


SNAP_CAPS = (1, 10, 100, 1000, 10 ** 4, 10 ** 5, 10 ** 6)


def snap(v: float, cap: int) -> Fraction:
    return Fraction(v).limit_denominator(cap)


def _norm(v):
    return float(np.linalg.norm(np.asarray(v, dtype=float))) if len(v) else 0.0


def _try_abnormal(p, xbar, lam, nu):
    JT, P, Q = reference_parts(p, xbar)
    vec = list(lam) + list(nu)
    s = _norm(vec)
    if s == 0:
        return None
    vec = [v / s for v in vec]
    m = len(lam)
    for cap in SNAP_CAPS:
        sv = [snap(v, cap) for v in vec]
        if max(abs(float(a) - b) for a, b in zip(sv, vec)) > 1e-3 or not any(sv[:m]) and not any(sv[m:]):
            continue
        l, n_ = tuple(sv[:m]), tuple(sv[m:])
        if any(dot(row, l) + v for row, v in zip(JT, n_)):
            continue
        if P.contains(l) is None or Q.contains(n_) is None:
            continue
        return Abnormal(l, n_)
    return None


def _try_mlimit(p, xbar, lam, nu):
    JT, P, Q = reference_parts(p, xbar)
    for cap in SNAP_CAPS:
        l = tuple(snap(v, cap) for v in lam)
        if lam and max(abs(float(a) - b) for a, b in zip(l, lam)) > 1e-3 * (1 + _norm(lam)):
            continue
        if P.contains(l) is None:
            continue
        for verts in p.objective.subgradients(xbar):
            for s in verts:
                n_ = tuple(-(si + dot(row, l)) for si, row in zip(s, JT))
                if Q.contains(n_) is None:
                    continue
                if max(abs(float(a) - b) for a, b in zip(n_, nu)) > 1e-3 * (1 + _norm(nu) + _norm(lam)):
                    continue
                b = (P.contains(l), Q.contains(n_))
                return MLimit(MCert(l, n_, b, s))
    return None


def classify_trace(trace: AMTrace, p: ProblemInstance, xbar=None, bound_factor=1e3, growth=1e2):
    """Bounded multipliers -> MLimit (exact MCert after snapping);
    diverging multipliers -> Abnormal direction; otherwise Inconclusive."""
    recs = trace.records
    if not recs:
        raise ValueError("empty trace")
    xbar = as_vector(xbar if xbar is not None else trace.xbar)
    norms = [_norm(list(r.lam) + list(r.nu)) for r in recs]
    first, last = norms[0], norms[-1]
    unbounded = max(norms) > bound_factor * (1 + first) or (len(recs) > 1 and last > growth * max(first, 1e-300))
    if unbounded:
        res = _try_abnormal(p, xbar, recs[-1].lam, recs[-1].nu)
        return res or Inconclusive("multipliers diverge but the normalized limit did not verify")
    res = _try_mlimit(p, xbar, recs[-1].lam, recs[-1].nu)
    return res or Inconclusive("bounded multipliers did not snap to an exact M-stationarity certificate")


def linearization_label(U: ConeUnion) -> str:
    """Short name of a cone union: R, R+, R-, {0} on the line, else a generator listing."""
    if U.dim == 1:
        has = lambda v: U.contains((Fraction(v),)) is not None
        pos, neg = has(1), has(-1)
        return {(True, True): "R", (True, False): "R+", (False, True): "R-", (False, False): "{0}"}[(pos, neg)]
    return U.describe()


_FROM_REGULARITY = {"SamplerConfig", "am_regularity_check", "ccp_check", "criterion_flag",
                    "dam_regularity_check"}


def __getattr__(name):
    # regularity builds on this module, so its checkers are re-exported lazily
    if name in _FROM_REGULARITY:
        from . import regularity
        return getattr(regularity, name)
    raise AttributeError(name)
