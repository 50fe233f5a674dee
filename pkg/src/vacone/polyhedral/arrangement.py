"""Faces of a central hyperplane arrangement, enumerated by exact LP."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from ..expr import as_vector
from . import linalg
from .lp import Optimal, solve_lp


def distinct_hyperplanes(rows, dim):
    """Normals deduplicated up to sign, zero rows dropped."""
    out, seen = [], set()
    for r in rows:
        r = as_vector(r)
        if len(r) != dim:
            raise ValueError("dimension mismatch")
        if not any(r):
            continue
        key = linalg.primitive(r)
        lead = next(v for v in key if v)
        if lead < 0:
            key = tuple(-v for v in key)
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def sign_realizable(hyperplanes, signs, dim, base_ineq=(), base_eq=()):
    """A point d in the unit box with sign(h_i . d) = signs[i] and the base
    constraints (``base_ineq @ d <= 0``, ``base_eq @ d = 0``), or None.

    Strictness is decided exactly: the minimum strict slack is maximized and
    the pattern is realizable iff that margin is positive.
    """
    nv = dim + 1
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    strict = False
    for h, s in zip(hyperplanes, signs):
        if s == 0:
            A_eq.append(list(h) + [0])
            b_eq.append(0)
        else:
            strict = True
            # s * h.d >= m  <=>  -s*h.d + m <= 0
            A_ub.append([-s * v for v in h] + [1])
            b_ub.append(0)
    for a in base_ineq:
        A_ub.append(list(a) + [0])
        b_ub.append(0)
    for a in base_eq:
        A_eq.append(list(a) + [0])
        b_eq.append(0)
    for i in range(dim):
        e = [0] * nv
        e[i] = 1
        A_ub.append(e)
        b_ub.append(1)
        A_ub.append([-v for v in e])
        b_ub.append(1)
    cap = [0] * dim + [1]
    A_ub.append(cap)
    b_ub.append(1)
    if not strict:
        return tuple(Fraction(0) for _ in range(dim))
    quick = _float_witness(hyperplanes, signs, dim, base_ineq, base_eq, A_ub, b_ub, A_eq, b_eq)
    if quick is not None:
        return quick
    if _certified_infeasible(hyperplanes, signs, dim, base_ineq, base_eq):
        return None
    res = solve_lp([0] * dim + [1], A_ub, b_ub, A_eq, b_eq, nvars=nv)
    if isinstance(res, Optimal) and res.value > 0:
        return res.point[:dim]
    return None


def _float_witness(hyperplanes, signs, dim, base_ineq, base_eq, A_ub, b_ub, A_eq, b_eq):
    """Cheap path: solve the margin LP in floats, snap the point into the exact
    equality subspace and re-check every sign exactly.  Returns None whenever
    the snapped point fails, so the exact LP stays the final word."""
    nv = dim + 1
    c = np.zeros(nv)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.asarray(A_ub, dtype=float), b_ub=np.asarray(b_ub, dtype=float),
                  A_eq=np.asarray(A_eq, dtype=float) if A_eq else None,
                  b_eq=np.asarray(b_eq, dtype=float) if A_eq else None,
                  bounds=[(None, None)] * nv, method="highs")
    if res.status != 0 or -res.fun < 1e-7:
        return None
    d = res.x[:dim]
    eqs = [list(r[:dim]) for r in A_eq]
    basis = linalg.nullspace(eqs, dim) if eqs else None
    if basis is not None:
        if not basis:
            return None
        B = np.asarray([[float(v) for v in b] for b in basis]).T
        coef = np.linalg.lstsq(B, d, rcond=None)[0]
        cq = [Fraction(float(v)).limit_denominator(10 ** 6) for v in coef]
        pt = tuple(sum((ci * b[j] for ci, b in zip(cq, basis)), Fraction(0)) for j in range(dim))
    else:
        pt = tuple(Fraction(float(v)).limit_denominator(10 ** 6) for v in d)
    for h, s in zip(hyperplanes, signs):
        v = linalg.dot(h, pt)
        if (v > 0) - (v < 0) != s:
            return None
    if any(linalg.dot(a, pt) > 0 for a in base_ineq) or any(linalg.dot(a, pt) != 0 for a in base_eq):
        return None
    return pt


def _certified_infeasible(hyperplanes, signs, dim, base_ineq, base_eq) -> bool:
    """Exact alternative certificate for an unrealizable sign pattern:
    y >= 0 with sum 1 on the strict rows, w >= 0 on base_ineq and free z on
    the equality rows with  sum y_i s_i h_i - sum w_b a_b + sum z_j e_j = 0.
    A float solution picks the support; the values are then solved exactly."""
    strict = [tuple(s * v for v in h) for h, s in zip(hyperplanes, signs) if s != 0]
    eqs = [tuple(h) for h, s in zip(hyperplanes, signs) if s == 0] + [tuple(a) for a in base_eq]
    neg = [tuple(-v for v in a) for a in base_ineq]
    cols = strict + neg + eqs + [tuple(-v for v in e) for e in eqs]
    ny = len(strict)
    A = np.asarray([[float(c[i]) for c in cols] for i in range(dim)] + [[1.0] * ny + [0.0] * (len(cols) - ny)])
    b = np.zeros(dim + 1)
    b[-1] = 1.0
    res = linprog(np.zeros(len(cols)), A_eq=A, b_eq=b, bounds=[(0, None)] * len(cols), method="highs")
    if res.status != 0:
        return False
    x = res.x
    support = [i for i in range(len(cols)) if x[i] > 1e-9]
    sub = [cols[i] for i in support]
    rows = [[c[i] for c in sub] + [Fraction(0)] for i in range(dim)]
    rows.append([Fraction(1 if i < ny else 0) for i in support] + [Fraction(1)])
    R, piv = linalg.rref(rows, len(sub) + 1)
    if len(sub) in piv:
        return False
    vals = [None] * len(sub)
    for c in range(len(sub)):
        if c not in piv:
            vals[c] = Fraction(float(x[support[c]])).limit_denominator(10 ** 6)
    for r, pc in zip(R, piv):
        vals[pc] = r[-1] - sum((r[c] * vals[c] for c in range(len(sub)) if c not in piv), Fraction(0))
    if any(v < 0 for v in vals):
        return False
    total = [sum((v * c[i] for v, c in zip(vals, sub)), Fraction(0)) for i in range(dim)]
    ysum = sum((v for v, i in zip(vals, support) if i < ny), Fraction(0))
    return not any(total) and ysum == 1


def enumerate_faces(hyperplanes, dim, base_ineq=(), base_eq=()):
    """All realizable sign vectors with a witness point, in lexicographic
    order of signs (-1 < 0 < 1).  Prefixes are pruned as soon as they become
    infeasible, so cost scales with the number of faces, not 3^m."""
    hyperplanes = list(hyperplanes)
    out = []

    def rec(prefix, pt):
        k = len(prefix)
        if k == len(hyperplanes):
            out.append((tuple(prefix), pt))
            return
        # the parent's witness already realizes the sign it sits on
        here = linalg.dot(hyperplanes[k], pt)
        here = (here > 0) - (here < 0)
        for s in (-1, 0, 1):
            cand = prefix + [s]
            if s == here:
                p = pt
            else:
                p = sign_realizable(hyperplanes[: k + 1], cand, dim, base_ineq, base_eq)
            if p is not None:
                rec(cand, p)

    rec([], tuple(Fraction(0) for _ in range(dim)))
    return out
