"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (python3 tests/test_acceptance.py) or through pytest, where the
lines are repeated in the terminal summary.
"""
import random
import time
from fractions import Fraction as F

import numpy as np

from vacone.calculus import asymptotic_stability_check, brute_force_limiting_cone, intersection_rule_check
from vacone.catalog import catalog_table, consistency_violations, load_catalog, run_catalog
from vacone.analysis import run_checks
from vacone.expr import PolyMap, Polynomial
from vacone.maps import Member, NotMember, coderivative_contains, coderivative_value, m_map_membership, verify_membership
from vacone.penalty import PenaltyConfig, am_trace
from vacone.polyhedral import (HPolyhedron, PolyUnion, h_to_cone, limiting_normal_cone, normal_cone_convex, polar,
                               polar_h, tangent_cone_convex)
from vacone.problem import ProblemInstance, SubdiffOracle
from vacone.stationarity import classify_trace, subregularity_probe

RESULTS = []


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def entry(name):
    return next(e.problem for e in load_catalog() if e.id == name)


# ------------------------------------------------------------ random generators

def rand_block(rng, point, max_rows=6):
    dim = len(point)
    A, b, eq = [], [], []
    for _ in range(rng.randint(1, max_rows)):
        a = [F(rng.randint(-3, 3)) for _ in range(dim)]
        if not any(a):
            a[rng.randrange(dim)] = F(1)
        e = rng.randint(0, 7) == 0
        s = 0 if e else rng.choice([0, 0, 0, 1, 2])
        A.append(a)
        b.append(sum(x * y for x, y in zip(a, point)) + s)
        eq.append(e)
    return HPolyhedron(A, b, eq, dim)


def rand_union(rng, dim, point=None):
    """Up to 3 blocks; the first always holds the point, later ones may sit away from it."""
    point = point or tuple(F(rng.randint(-1, 1)) for _ in range(dim))
    blocks = []
    for i in range(rng.randint(1, 3)):
        if i == 0 or rng.randint(0, 3) > 0:
            blocks.append(rand_block(rng, point))
        else:
            blocks.append(rand_block(rng, tuple(p + F(rng.randint(1, 2)) for p in point)))
    return PolyUnion(blocks), point


V2 = ("x1", "x2")


def rand_affine_instance(rng, pid="affine"):
    """G(x) = Jx into a union of polyhedral cones; M is the union of the block preimages."""
    m = rng.randint(1, 3)
    J = [[F(rng.randint(-2, 2)) for _ in V2] for _ in range(m)]
    for r in J:
        if not any(r):
            r[rng.randrange(2)] = F(1)
    blocks = []
    for _ in range(rng.randint(1, 2)):
        A = []
        for _ in range(rng.randint(1, m)):
            a = [F(rng.randint(-1, 1)) for _ in range(m)]
            if not any(a):
                a[rng.randrange(m)] = F(1)
            A.append(a)
        eq = [rng.randint(0, 5) == 0 for _ in A]
        blocks.append(HPolyhedron(A, [F(0)] * len(A), eq, m))
    M = PolyUnion([HPolyhedron([[sum(a[i] * J[i][j] for i in range(m)) for j in range(2)] for a in B.A],
                               B.b, B.eq_mask, 2) for B in blocks])
    f = Polynomial.linear(V2, [rng.randint(-2, 2), rng.randint(-2, 2)])
    G = PolyMap([Polynomial.linear(V2, r) for r in J], V2)
    return ProblemInstance(id=pid, variables=V2, objective=SubdiffOracle.smooth(f), G=G, K=PolyUnion(blocks),
                           C=PolyUnion.everything(2), point=(F(0), F(0)), M_explicit=M)


# ------------------------------------------------------------ criteria

EXPECTED = {
    "am_not_m_square": {"m_stat": "Refuted", "am_stat": "Certified"},
    "fjm_not_am_abs": {"fjm": "Proved", "am_stat": "Refuted"},
    "subregular_not_am_regular": {"am_reg": "Refuted"},
    "am_regular_not_subregular": {"am_reg": "Proved"},
    "not_dam_stationary_disk": {"dam_stat": "Refuted"},
    "dam_regular_not_am_regular": {"dam_reg": "Proved", "am_reg": "Refuted"},
    "parabola_not_am_regular": {"am_reg": "Refuted"},
    "cubic_gacq_fails": {"am_reg": "Proved", "gacq": "Refuted", "linearization": "R"},
}


def test_criterion_1_catalog_matrix():
    t = time.perf_counter()
    rep = run_catalog()
    secs = time.perf_counter() - t
    values = {e.id: e.values for e in rep.entries}
    bad = [f"{eid}.{k}: got {values.get(eid, {}).get(k)}" for eid, exp in EXPECTED.items()
           for k, v in exp.items() if values.get(eid, {}).get(k) != v]
    ok = rep.hard_failures == 0 and not bad and secs < 60
    report(1, ok, f"{len(rep.entries)} entries, {rep.hard_failures} hard failures, "
                  f"{len(bad)} matrix mismatches {bad}, {secs:.1f}s" + ("" if ok else "\n" + catalog_table(rep)))


def test_criterion_2_exact_replays():
    ks = [10, 100, 1000, 10000]
    p = entry("am_not_m_square")
    gc = p.gc
    fails = []
    for k in ks:
        x, y, lam = (F(-1, k),), (F(1, k * k),), (F(k, 2),)
        # lam is a normal to K at G(x) - y = 0, and grad f + G'(x)^T lam = 0 exactly
        if not coderivative_contains(gc, x, (y, (0,)), (lam, (0,))):
            fails.append(f"square k={k}: multiplier not normal")
        grad_f = p.objective.subgradients(x)[0][0]
        eps = tuple(a + b for a, b in zip(grad_f, coderivative_value(gc, x, lam)))
        if eps != (0,):
            fails.append(f"square k={k}: eps={eps}")
    q = entry("subregular_not_am_regular")
    for k in ks:
        x, y = (F(-1, k), F(0)), (F(-1, k * k), F(0))
        w = m_map_membership(q.gc, x, y, (1, 0))
        if not isinstance(w, Member) or not verify_membership(q.gc, x, y, (1, 0), w):
            fails.append(f"quadrant k={k}: (1,0) not in M(x_k, y_k)")
    if not isinstance(m_map_membership(q.gc, (0, 0), (0, 0), (1, 0)), NotMember):
        fails.append("quadrant: (1,0) in M(0,0)")
    report(2, not fails, f"square and quadrant sequences at k in {ks}: {fails or 'all exact'}")


def test_criterion_3_penalty_trace():
    p = entry("am_not_m_square")
    t = time.perf_counter()
    trace = am_trace(p, None, PenaltyConfig.up_to(1e6, tol=1e-8))
    c = classify_trace(trace, p)
    secs = time.perf_counter() - t
    recs = trace.records
    xf = abs(recs[-1].x[0])
    eps = max(float(np.linalg.norm(r.eps)) for r in recs)
    growth = recs[-1].lam[0] / recs[0].lam[0]
    ok = (recs[-1].k == 1e6 and xf <= 1e-2 and eps <= 1e-6 and growth >= 10 and c.name == "Abnormal"
          and c.lam == (1,) and secs < 5)
    report(3, ok, f"|x_final|={xf:.3e}, max eps={eps:.1e}, lambda growth={growth:.1f}, "
                  f"{c.name} lambda={[str(v) for v in getattr(c, 'lam', ())]}, {secs:.2f}s")


def test_criterion_4_oracle_equivalence():
    rng = random.Random(7)
    t = time.perf_counter()
    instances = queries = disagreements = 0
    for dim, count in ((2, 50), (3, 20)):
        for _ in range(count):
            S, y = rand_union(rng, dim)
            N = limiting_normal_cone(S, y)
            cloud = brute_force_limiting_cone(S, y)
            qs = []
            for b in N.branches:
                gens = b.generators()
                qs += gens
                for _ in range(20):
                    if gens:
                        qs.append(tuple(sum(rng.randint(0, 3) * g[j] for g in gens) for j in range(dim)))
            while len(qs) < 200:
                qs.append(tuple(F(rng.randint(-5, 5)) for _ in range(dim)))
            qs = qs[:200]
            disagreements += sum((N.contains(q) is not None) != cloud.contains(q, 1e-3) for q in qs)
            queries += len(qs)
            instances += 1
    secs = time.perf_counter() - t
    report(4, disagreements == 0 and secs < 120,
           f"{instances} unions, {queries} queries, {disagreements} disagreements, {secs:.1f}s")


def test_criterion_5_cone_calculus_properties():
    rng = random.Random(5)
    fails = []
    for i in range(100):
        dim = rng.randint(2, 3)
        y = tuple(F(rng.randint(-1, 1)) for _ in range(dim))
        P = rand_block(rng, y)
        T = h_to_cone(tangent_cone_convex(P, y))
        N = normal_cone_convex(P, y)
        if not polar_h(polar(T)).same_as(T):
            fails.append(f"polar involution #{i}")
        if not polar_h(tangent_cone_convex(P, y)).same_as(N):
            fails.append(f"normal = polar of tangent #{i}")
        # robustness: normals at nearby points of P stay inside N(y), and the limiting cone is N(y)
        U = limiting_normal_cone(PolyUnion([P]), y)
        if len(U.branches) != 1 or not U.branches[0].same_as(N):
            fails.append(f"limiting != convex normal #{i}")
        for _ in range(5):
            d = [F(rng.randint(-3, 3)) for _ in range(dim)]
            # |a.d| <= 27 and slacks are >= 1, so these steps keep slack rows slack
            for s in (F(1, 100), F(1, 10 ** 6)):
                z = tuple(a + s * v for a, v in zip(y, d))
                if P.contains(z) and not normal_cone_convex(P, z).is_subset(N):
                    fails.append(f"robustness #{i}")
    names = ("x1", "x2", "x3")
    worst = 0.0
    for i in range(100):
        nv = rng.randint(1, 3)
        terms = {}
        for _ in range(rng.randint(1, 6)):
            e = tuple(rng.randint(0, 3) for _ in range(nv))
            terms[e] = F(rng.randint(-5, 5), rng.randint(1, 3))
        p = Polynomial(names[:nv], terms)
        x = [F(rng.randint(-20, 20), 10) for _ in range(nv)]
        h = F(1, 10 ** 6)
        g = [q.eval(x) for q in p.gradient()]
        fd = []
        for j in range(nv):
            up = list(x)
            dn = list(x)
            up[j] += h
            dn[j] -= h
            fd.append((p.eval(up) - p.eval(dn)) / (2 * h))
        scale = max(1.0, max(abs(float(v)) for v in g))
        worst = max(worst, max(abs(float(a - b)) for a, b in zip(g, fd)) / scale)
    if worst > 1e-6:
        fails.append(f"gradient vs finite difference {worst:.1e}")
    report(5, not fails, f"100 polyhedra, 100 polynomials (worst gradient error {worst:.1e}): {fails or 'all hold'}")


SWEEP = ["m_stat", "am_stat", "fjm", "nnamcq", "polyhedral", "am_reg", "preimage"]


def test_criterion_6_consistency_sweep():
    rep = run_catalog()
    viol = list(rep.consistency)
    rng = random.Random(6)
    n = 0
    for i in range(50):
        p = rand_affine_instance(rng, f"affine{i}")
        vals = {s.check: s.value for s in run_checks(p, SWEEP)}
        viol += consistency_violations(p.id, vals)
        if vals["am_reg"] != "Proved":
            viol.append(f"{p.id}: polyhedral instance with am_reg {vals['am_reg']}")
        n += 1
    report(6, not viol, f"{len(rep.entries)} catalog entries + {n} random affine instances, "
                        f"{len(viol)} violations {viol[:3]}")


def test_criterion_7_subregularity_probe():
    r = subregularity_probe(entry("am_regular_not_subregular"))
    at = {m["t"]: m["max_ratio"] for m in r.max_by_radius}
    div = at[F(1, 100)]
    rng = random.Random(2024)
    worst = 0.0
    for i in range(20):
        pr = subregularity_probe(rand_affine_instance(rng, f"affine{i}"))
        worst = max(worst, max(m["max_ratio"] for m in pr.max_by_radius))
    ok = div >= 100 and r.verdict == "diverges" and worst <= 10
    report(7, ok, f"cubic lifting ratio at 1e-2 = {div:.1f} ({r.verdict}); worst affine ratio {worst:.2f}")


def test_criterion_8_polyhedral_calculus():
    rng = random.Random(8)
    bad = []
    for i in range(20):
        dim = rng.randint(2, 3) if i % 4 == 0 else 2
        K, y = rand_union(rng, dim)
        C, _ = rand_union(rng, dim, y)
        stab = asymptotic_stability_check(K, C, y)
        inter = intersection_rule_check(K, C, y)
        if stab.name != "Proved" or inter.name != "Holds":
            bad.append(f"#{i}: {stab.name}/{inter.name}")
    report(8, not bad, f"20 random (K, C, x) instances: {bad or 'all Proved/Holds'}")


if __name__ == "__main__":
    import sys
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
