"""Tangent, regular and limiting normal cones of polyhedral sets and unions."""
from __future__ import annotations

from ..expr import as_vector
from .arrangement import enumerate_faces
from .cones import GenCone, HPolyhedron, check_capacity
from .sets import PolyUnion
from .unions import ConeUnion


def _require_member(D: HPolyhedron, y):
    if not D.contains(y):
        raise ValueError("point is not in the polyhedron")


def tangent_cone_convex(D: HPolyhedron, y) -> HPolyhedron:
    y = as_vector(y)
    _require_member(D, y)
    act = D.active_rows(y)
    rows = [D.A[i] for i in act] + [D.A[i] for i in D.eq_rows()]
    mask = [False] * len(act) + [True] * len(D.eq_rows())
    return HPolyhedron(rows, [0] * len(rows), mask, D.dim)


def normal_cone_convex(D: HPolyhedron, y) -> GenCone:
    y = as_vector(y)
    _require_member(D, y)
    return GenCone([D.A[i] for i in D.active_rows(y)], [D.A[i] for i in D.eq_rows()], D.dim)


def limiting_normal_cone(S: PolyUnion, y) -> ConeUnion:
    """Limiting normal cone of a union of convex polyhedra.

    Near y only the rows active at y matter, so the local shape of S is a
    union of polyhedral cones in the displacement d = y' - y.  The faces of
    the arrangement of those rows are the possible activity patterns; each
    realizable face that meets S contributes the regular normal cone there,
    which is the intersection of the normal cones of the blocks containing it.
    """
    y = as_vector(y)
    if len(y) != S.dim:
        raise ValueError("dimension mismatch")
    if not S.is_polyhedral:
        raise ValueError("limiting_normal_cone needs polyhedral blocks; smooth blocks are handled pointwise")
    if not S.contains(y):
        raise ValueError("point is not in the set")
    dim = S.dim
    # local rows per containing block: (le rows active at y, eq rows)
    local = []
    for j, B in enumerate(S.blocks):
        if B.contains(y):
            check_capacity(B.nrows, B.dim, "block")
            local.append((B, B.active_rows(y), B.eq_rows()))
    # hyperplane list with (block, row) back-references; no sign dedupe here
    # because each block reads its own row orientation
    hyps, refs = [], {}
    for bi, (B, act, eqs) in enumerate(local):
        for i in act + eqs:
            key = tuple(B.A[i])
            neg = tuple(-v for v in key)
            if key in refs:
                refs[key].append((bi, i, 1))
            elif neg in refs:
                refs[neg].append((bi, i, -1))
            else:
                refs[key] = [(bi, i, 1)]
                hyps.append(key)
    if len(hyps) > 20:
        check_capacity(len(hyps), dim, "local arrangement")
    sign_of = {}
    for h_idx, h in enumerate(hyps):
        for bi, i, orient in refs[h]:
            sign_of[(bi, i)] = (h_idx, orient)

    cache = {}
    pieces = []
    for signs, _ in enumerate_faces(hyps, dim):
        containing = []
        for bi, (B, act, eqs) in enumerate(local):
            ok = True
            tight = []
            for i in act:
                h_idx, orient = sign_of[(bi, i)]
                s = signs[h_idx] * orient
                if s > 0:
                    ok = False
                    break
                if s == 0:
                    tight.append(i)
            if ok:
                for i in eqs:
                    h_idx, _ = sign_of[(bi, i)]
                    if signs[h_idx] != 0:
                        ok = False
                        break
            if ok:
                containing.append((bi, tuple(tight)))
        if not containing:
            continue
        cone = None
        for bi, tight in containing:
            key = (bi, tight)
            if key not in cache:
                B, _, eqs = local[bi]
                cache[key] = GenCone([B.A[i] for i in tight], [B.A[i] for i in eqs], dim)
            c = cache[key]
            cone = c if cone is None else cone.intersect(c)
        pieces.append(cone)
    return ConeUnion(pieces, dim).pruned()


def regular_normal_cone(S: PolyUnion, y) -> GenCone:
    """Regular (Fréchet) normal cone: the intersection of the normal cones of
    the blocks containing y."""
    y = as_vector(y)
    if not S.is_polyhedral:
        raise ValueError("needs polyhedral blocks")
    cone = None
    for B in S.blocks:
        if B.contains(y):
            c = normal_cone_convex(B, y)
            cone = c if cone is None else cone.intersect(c)
    if cone is None:
        raise ValueError("point is not in the set")
    return cone.canonical


def tangent_cone_union(S: PolyUnion, y) -> list[HPolyhedron]:
    """Tangent cone of a polyhedral union: the union of the blocks' tangent cones."""
    y = as_vector(y)
    return [tangent_cone_convex(B, y) for B in S.blocks if B.contains(y)]
