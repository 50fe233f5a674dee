"""The AM- and dAM-regularity ladder.

Proofs come from polyhedrality, from NNAMCQ, or from a sign analysis of the
image generators x -> G'(x)^T g near x̄.  Refutations come from a symbolic
line sampler: along x = x̄ + t d the images are polynomials in t, so the
limit direction of a scaled combination is the leading Laurent coefficient
and is exact.
"""
from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .expr import Polynomial
from .maps import m_map_membership, normal_cone
from .polyhedral import ConeUnion, GenCone, SmoothConvexBlock, cone_union_inclusion
from .polyhedral.linalg import dot
from .polyhedral.unions import Counterexample
from .problem import ProblemInstance
from .stationarity import (_normal_along_ray, _point, _ray_in_block, analytic_cells, nnamcq_check,
                           polyhedrality_check, reference_cone, taylor_sign)
from .verdicts import Proved, Refuted, Unknown

ZERO = Fraction(0)


def default_seed() -> int:
    return int(os.environ.get("VACONE_SEED", "0"))


@dataclass
class SamplerConfig:
    radii: tuple = tuple(Fraction(1, 10 ** j) for j in range(1, 7))
    n_directions: int = 64
    alpha_grid: tuple = (0, 1, 2, 3)
    seed: int = field(default_factory=default_seed)

    @property
    def relative_exponents(self):
        return sorted({a - b for a in self.alpha_grid for b in self.alpha_grid})


# ------------------------------------------------------------ univariate helpers

def restrict(poly: Polynomial, xbar, d):
    """Coefficients (ascending in t) of t -> poly(x̄ + t d)."""
    out = [ZERO]
    for exps, c in poly.terms.items():
        acc = [Fraction(c)]
        for e, a, v in zip(exps, xbar, d):
            for _ in range(e):
                nxt = [ZERO] * (len(acc) + 1)
                for i, ci in enumerate(acc):
                    nxt[i] += ci * a
                    nxt[i + 1] += ci * v
                acc = nxt
        if len(acc) > len(out):
            out += [ZERO] * (len(acc) - len(out))
        for i, ci in enumerate(acc):
            out[i] += ci
    return out


def _laurent_add(a: dict, b: dict, shift=0, scale=1):
    out = dict(a)
    for p, v in b.items():
        q = p + shift
        cur = out.get(q)
        w = tuple(scale * x for x in v)
        out[q] = w if cur is None else tuple(x + y for x, y in zip(cur, w))
    return {p: v for p, v in out.items() if any(v)}


def _vector_series(coeff_lists, n):
    """Vector of coefficient lists -> {power: vector}."""
    deg = max(len(c) for c in coeff_lists)
    out = {}
    for p in range(deg):
        v = tuple(c[p] if p < len(c) else ZERO for c in coeff_lists)
        if any(v):
            out[p] = v
    return out


def _leading(series: dict):
    if not series:
        return None, None
    p = min(series)
    return p, series[p]


def _eval_series(series: dict, t, shift):
    n = len(next(iter(series.values())))
    out = [ZERO] * n
    for p, v in series.items():
        for i in range(n):
            out[i] += v[i] * t ** (p + shift)
    return tuple(out)


def primitive_direction(v):
    """Positive multiple of v with coprime integer entries."""
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    return tuple(Fraction(x // g) for x in ints) if g else tuple(Fraction(0) for _ in v)


# ------------------------------------------------------------ sign analysis

def nonpositive_near(poly: Polynomial, xbar, sides=None) -> bool | None:
    """True if poly <= 0 on a neighborhood of x̄ (restricted to the given
    sides when one-dimensional); None when the simple rules cannot decide."""
    if poly.is_zero():
        return True
    v = poly.eval(xbar)
    if v < 0:
        return True
    if v > 0:
        return False
    if poly.nvars == 1:
        for s in (sides or (-1, 1)):
            if taylor_sign(poly, xbar, s) > 0:
                return False
        return True
    q = poly.shift(xbar)
    if all(c < 0 and all(e % 2 == 0 for e in exps) for exps, c in q.terms.items()):
        return True
    return None


def _decoupled_sides(p: ProblemInstance, x):
    if p.n != 1:
        return None
    return [s for s in (-1, 1) if p.C.whole_space or
            any(_ray_in_block(B, x, (Fraction(s),)) for B in p.C.blocks)]


def sign_analysis(p: ProblemInstance, x, decoupled: bool):
    """Prove that every nearby value of the multiplier-image map lies in
    M(x̄, 0): each (N_K branch, N_C branch) pair must map into one reference
    branch for all x near x̄.  Returns a certificate dict or None."""
    P = normal_cone(p.K, p.G.eval(x))
    Q = normal_cone(p.C, x)
    ref = reference_cone(p, x)
    sides = _decoupled_sides(p, x) if decoupled else None
    images = {}

    def image(g):
        if g not in images:
            images[g] = p.G.transpose_apply_poly(g)
        return images[g]

    assignment = []
    for pi, pb in enumerate(P.branches):
        for qi, qb in enumerate(Q.branches):
            found = None
            for ri, rb in enumerate(ref.branches):
                if not all(rb.contains(g) for g in qb.generators()):
                    continue
                ineq, eq = rb.facets
                ok = True
                for g in pb.rays:
                    img = image(g)
                    for h in ineq:
                        if nonpositive_near(_combine(h, img), x, sides) is not True:
                            ok = False
                            break
                    for h in eq if ok else ():
                        if not _combine(h, img).is_zero():
                            ok = False
                            break
                    if not ok:
                        break
                if ok:
                    for g in pb.lineality:
                        img = image(g)
                        if not all(_combine(h, img).is_zero() for h in list(ineq) + list(eq)):
                            ok = False
                            break
                if ok:
                    found = ri
                    break
            if found is None:
                return None
            assignment.append({"normal_branch": pi, "C_branch": qi, "reference_branch": found})
    return {"reference": ref, "assignment": assignment}


def _combine(h, polys):
    out = None
    for hi, q in zip(h, polys):
        if hi:
            term = q * hi
            out = term if out is None else out + term
    return out if out is not None else Polynomial(polys[0].variables)


# ------------------------------------------------------------ refutation sampler

def _directions(p: ProblemInstance, cfg: SamplerConfig):
    n = p.n
    axes = []
    for i in range(n):
        for s in (1, -1):
            axes.append(tuple(Fraction(s * int(i == j)) for j in range(n)))
    if n == 1:
        return axes, []
    rng = random.Random(cfg.seed)
    extra, seen = [], set(axes)
    tries = 0
    while len(extra) < cfg.n_directions and tries < 50 * cfg.n_directions:
        tries += 1
        d = tuple(Fraction(rng.randint(-3, 3)) for _ in range(n))
        if not any(d):
            continue
        d = primitive_direction(d)
        if d not in seen:
            seen.add(d)
            extra.append(d)
    return axes, extra


def _face_threshold(S, x, d):
    """Largest t0 such that the active pattern of x + t d is constant on (0, t0)."""
    t0 = None
    for B in S.blocks:
        for a, bi in zip(B.A, B.b):
            ad, slack = dot(a, d), bi - dot(a, x)
            if ad != 0 and slack != 0:
                r = slack / ad
                if r > 0:
                    t0 = r if t0 is None else min(t0, r)
    return t0


def _candidates(pool, rel_exps):
    """Scaled combinations of image series: (label, {power: vector})."""
    out = []
    for i, (li, si) in enumerate(pool):
        out.append(([(li, 0)], si))
    for i in range(len(pool)):
        for j in range(i + 1, len(pool)):
            (li, si), (lj, sj) = pool[i], pool[j]
            for b in rel_exps:
                out.append(([(li, 0), (lj, -b)], _laurent_add(si, sj, shift=-b)))
    if len(pool) > 2:
        tot, labels = {}, []
        for l, s in pool:
            tot = _laurent_add(tot, s)
            labels.append((l, 0))
        out.append((labels, tot))
    return out


def _pool_polyhedral(p, x, d, pb: GenCone, Qb: GenCone):
    pool = []
    for kind, gens in (("ray", pb.rays), ("lin", pb.lineality)):
        for g in gens:
            polys = p.G.transpose_apply_poly(g)
            series = _vector_series([restrict(q, x, d) for q in polys], p.n)
            if series:
                pool.append(((kind, g), series))
                if kind == "lin":
                    pool.append((("lin-", tuple(-v for v in g)), {k: tuple(-a for a in v) for k, v in series.items()}))
    for g in Qb.rays:
        pool.append((("C", g), {0: tuple(g)}))
    for g in Qb.lineality:
        pool.append((("C", g), {0: tuple(g)}))
        pool.append((("C", tuple(-v for v in g)), {0: tuple(-v for v in g)}))
    return pool


def _verify_finite(p, x, d, labels, series, decoupled, cfg, tmax=None):
    """Exact membership of the scaled combination in M(x_k, y_k) at the two smallest radii."""
    gc = p.gc
    lead, _ = _leading(series)
    out = []
    for t in sorted(cfg.radii)[:2]:
        if tmax is not None and t >= tmax:
            return None
        xk = tuple(a + t * v for a, v in zip(x, d))
        yk = tuple(a - b for a, b in zip(p.G.eval(xk), p.G.eval(x)))
        zk = None if decoupled else tuple(a - b for a, b in zip(xk, x))
        xstar = _eval_series(series, t, -lead)
        res = m_map_membership(gc, xk, yk, xstar, z=zk)
        if not hasattr(res, "lam"):
            return None
        out.append({"t": t, "x": xk, "y": yk, "z": zk, "xstar": xstar, "lambda": res.lam, "nu": res.nu})
    return out


def _sample_polyhedral(p, x, cfg: SamplerConfig, decoupled: bool):
    ref = reference_cone(p, x)
    P = normal_cone(p.K, p.G.eval(x))
    axes, extra = _directions(p, cfg)
    rel = cfg.relative_exponents
    for batch in (axes, extra):
        found = []
        for d in batch:
            tmax = None
            if decoupled:
                if not (p.C.whole_space or any(_ray_in_block(B, x, d) for B in p.C.blocks)):
                    continue
                Q = _normal_along_ray(p.C, x, d)
                tmax = _face_threshold(p.C, x, d)
            else:
                Q = normal_cone(p.C, x)
            for pb in P.branches:
                for qb in Q.branches:
                    for labels, series in _candidates(_pool_polyhedral(p, x, d, pb, qb), rel):
                        lead, vec = _leading(series)
                        if vec is None:
                            continue
                        lim = primitive_direction(vec)
                        if ref.contains(lim) is not None:
                            continue
                        fin = _verify_finite(p, x, d, labels, series, decoupled, cfg, tmax)
                        if fin is None:
                            continue
                        found.append({"limit": lim, "direction": d, "leading_power": lead,
                                      "combination": [{"generator": g, "kind": k, "power": s}
                                                      for (k, g), s in labels],
                                      "finite_k": fin})
                        break
        if found:
            return max(found, key=lambda w: (w["limit"], w["direction"]))
    return None


def _boundary_curves(block: SmoothConvexBlock, w):
    """Curves s -> w(s) on the boundary piece of each active constraint, in
    which the constraint is solved for a coordinate entering linearly with a
    constant coefficient."""
    ell = len(w)
    for j in block.active(w):
        g = block.polys[j]
        for c in range(ell):
            lin = {e: v for e, v in g.terms.items() if e[c] == 1 and sum(e) == 1}
            if not lin or any(e[c] > 1 or (e[c] == 1 and sum(e) > 1) for e in g.terms):
                continue
            a = next(iter(lin.values()))
            rest = {e: v for e, v in g.terms.items() if e[c] == 0}
            for o in range(ell):
                if o == c:
                    continue
                for s in (1, -1):
                    yield j, c, o, s, a, Polynomial(g.variables, rest)


def _sample_smooth(p, x, cfg: SamplerConfig, decoupled: bool):
    """K a single smooth block: move G(x) - y along a boundary curve, keep x = x̄."""
    block = p.K.blocks[0]
    w0 = p.G.eval(x)
    ref = reference_cone(p, x)
    J = p.G.jacobian(x)
    found = []
    for j, c, o, s, a, rest in _boundary_curves(block, w0):
        def curve(t):
            w = list(w0)
            w[o] = w0[o] + s * t
            w[c] = ZERO
            w[c] = -rest.eval(w) / a
            return tuple(w)
        # image coefficients in t via exact interpolation of a polynomial of bounded degree
        deg = max(1, block.polys[j].degree) ** 2 + 1
        ts = [Fraction(i + 1, 10 ** 7) for i in range(deg + 1)]
        vals = []
        for t in ts:
            wt = curve(t)
            if not block.contains(wt):
                vals = None
                break
            gvec = block.gradient(j, wt)
            vals.append(tuple(sum((J[i][k] * gvec[i] for i in range(len(gvec))), ZERO) for k in range(p.n)))
        if vals is None:
            continue
        coeffs = [_interpolate(ts, [v[k] for v in vals]) for k in range(p.n)]
        series = _vector_series(coeffs, p.n)
        lead, vec = _leading(series)
        if vec is None:
            continue
        lim = primitive_direction(vec)
        if ref.contains(lim) is not None:
            continue
        fin = []
        for t in sorted(cfg.radii)[:2]:
            wt = curve(t)
            yk = tuple(g - v for g, v in zip(w0, wt))
            xstar = _eval_series(series, t, -lead)
            res = m_map_membership(p.gc, x, yk, xstar, z=None if decoupled else tuple(ZERO for _ in x))
            if not hasattr(res, "lam"):
                fin = None
                break
            fin.append({"t": t, "x": x, "y": yk, "xstar": xstar, "lambda": res.lam, "nu": res.nu})
        if fin:
            found.append({"limit": lim, "boundary_constraint": j, "solved_coordinate": c,
                          "moved_coordinate": o, "sign": s, "leading_power": lead, "finite_k": fin})
    if found:
        return max(found, key=lambda w: w["limit"])
    return None


def _interpolate(ts, vals):
    """Coefficients of the polynomial through (ts, vals), exact (Newton form)."""
    n = len(ts)
    coef = list(vals)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (ts[i] - ts[i - j])
    poly = [ZERO]
    for i in range(n - 1, -1, -1):
        # poly = poly * (t - ts[i]) + coef[i]
        nxt = [ZERO] * (len(poly) + 1)
        for k, v in enumerate(poly):
            nxt[k + 1] += v
            nxt[k] -= v * ts[i]
        nxt[0] += coef[i]
        poly = nxt
    while len(poly) > 1 and poly[-1] == 0:
        poly.pop()
    return poly


# ------------------------------------------------------------ the ladder

def criterion_flag(p: ProblemInstance) -> str:
    """Whether the disjunctive characterization applies (K a finite union of polyhedra)."""
    return "applicable" if p.has_gk and p.K.is_polyhedral else "inapplicable"


def _analytic_regularity(p: ProblemInstance, decoupled: bool):
    cells = analytic_cells(p, decoupled)
    U = ConeUnion([b for c in cells for b in c.cone.branches], p.n)
    ref = p.analytic["reference_cone"]
    res = cone_union_inclusion(U, ref)
    if isinstance(res, Counterexample):
        return Refuted({"limit": primitive_direction(res.vector), "cells": [c.label for c in cells]}, "analytic cells")
    if res.exact:
        return Proved({"cells": [c.label for c in cells], "reference": ref}, "analytic cells")
    return Unknown("analytic cell inclusion verified only by sampling")


def _regularity(p: ProblemInstance, x, cfg, decoupled: bool):
    x = _point(p, x)
    cfg = cfg or SamplerConfig()
    if p.analytic is not None and not p.has_gk:
        return _analytic_regularity(p, decoupled)
    if polyhedrality_check(p):
        return Proved({"reason": "G affine and K, C polyhedral"}, "polyhedrality")
    if nnamcq_check(p, x):
        return Proved({"reason": "no nonzero abnormal multiplier"}, "NNAMCQ")
    if p.K.is_polyhedral and (p.C.whole_space or p.C.is_polyhedral):
        cert = sign_analysis(p, x, decoupled)
        if cert is not None:
            return Proved(cert, "sign analysis of image generators")
        w = _sample_polyhedral(p, x, cfg, decoupled)
        if w is not None:
            return Refuted(w, "symbolic line sampler")
        return Unknown(f"no refuting limit on {cfg.n_directions} directions and exponents "
                       f"{cfg.relative_exponents}; sign analysis undecided")
    if len(p.K.blocks) == 1 and isinstance(p.K.blocks[0], SmoothConvexBlock) and \
            (p.C.whole_space or p.C.is_polyhedral):
        w = _sample_smooth(p, x, cfg, decoupled)
        if w is not None:
            return Refuted(w, "boundary-curve sampler")
        return Unknown("smooth K: no refuting boundary curve found")
    return Unknown("unsupported combination of smooth and polyhedral blocks")


def am_regularity_check(p: ProblemInstance, x=None, cfg: SamplerConfig | None = None):
    return _regularity(p, x, cfg, decoupled=False)


def dam_regularity_check(p: ProblemInstance, x=None, cfg: SamplerConfig | None = None):
    """Decoupled variant: x stays in C and N_C is taken at x itself."""
    if p.C.whole_space:
        return _regularity(p, x, cfg, decoupled=False)
    return _regularity(p, x, cfg, decoupled=True)


def is_nlp_shape(p: ProblemInstance) -> bool:
    """K = R_-^p x {0}^q (any order of single-coordinate rows) and C = R^n."""
    if not p.has_gk or not p.C.whole_space or len(p.K.blocks) != 1:
        return False
    B = p.K.blocks[0]
    if not p.K.is_polyhedral:
        return False
    seen = set()
    for a, b, e in zip(B.A, B.b, B.eq_mask):
        nz = [i for i, v in enumerate(a) if v != 0]
        if len(nz) != 1 or b != 0 or (not e and a[nz[0]] < 0):
            return False
        seen.add(nz[0])
    return len(seen) == len(B.A) == B.dim


def ccp_check(p: ProblemInstance, x=None, cfg: SamplerConfig | None = None):
    """Cone-continuity property of a standard nonlinear program (= AM-regularity there)."""
    if not is_nlp_shape(p):
        raise ValueError("K must be R_-^p x {0}^q and C the whole space")
    return am_regularity_check(p, x, cfg)
