"""Command-line interface.

Exit codes: 0 on completion, 1 on an analysis error (including an
infeasible point), 2 on a parse or schema error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import ALL_CHECKS, run_checks
from .expr import as_fraction, as_vector
from .maps import Member, normal_cone, verify_membership
from .polyhedral import CapacityError, ConeUnion, HPolyhedron, h_to_cone, regular_normal_cone
from .problem import SchemaError, load_problem
from .regularity import SamplerConfig, default_seed
from .verdicts import FJMCert, MCert, jsonable


class Usage(Exception):
    """Bad command-line input; reported with exit code 2."""


def _point(text, dim=None):
    if text is None:
        return None
    try:
        vals = tuple(as_fraction(t.strip()) for t in text.split(","))
    except (ValueError, ZeroDivisionError) as e:
        raise Usage(f"bad point {text!r}: {e}") from None
    if dim is not None and len(vals) != dim:
        raise Usage(f"point {text!r} has {len(vals)} coordinates, expected {dim}")
    return vals


def _load(path):
    if not Path(path).exists():
        raise Usage(f"no such file: {path}")
    return load_problem(path)


def _emit_json(obj):
    sys.stdout.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


# ------------------------------------------------------------ analyze

def cmd_analyze(args):
    p = _load(args.file)
    x = _point(args.point, p.n)
    if x is not None:
        p = p.with_point(x)
    checks = [c.strip() for c in args.checks.split(",")] if args.checks else None
    if checks:
        bad = [c for c in checks if c not in ALL_CHECKS]
        if bad:
            raise Usage(f"unknown checks {bad}; choose from {', '.join(ALL_CHECKS)}")
    cfg = SamplerConfig(seed=args.seed, n_directions=args.samples)
    if args.verify:
        return _verify(p, args.verify)
    sections = run_checks(p, checks, cfg=cfg)
    report = {"id": p.id, "point": jsonable(p.point), "seed": args.seed,
              "sections": [s.to_json() for s in sections]}
    if args.json:
        _emit_json(report)
    else:
        print(f"{p.id}  at x = ({', '.join(jsonable(p.point))})")
        for s in sections:
            print(f"  {s.check:15s} {s.value:12s} {s.seconds * 1000:8.1f} ms")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return 0


def _vec(v):
    return as_vector(v)


def _verify(p, report_path):
    """Re-check the exact certificates stored in an analyze report."""
    from .stationarity import verify_fjm, verify_mcert
    data = json.loads(Path(report_path).read_text(encoding="utf-8"))
    x = as_vector(data["point"])
    results = []
    for sec in data["sections"]:
        det = sec.get("detail") or {}
        if not isinstance(det, dict):
            continue
        if sec["check"] == "m_stat" and det.get("verdict") == "Proved":
            c = det["certificate"]["mcert"]
            cert = MCert(_vec(c["lam"]), _vec(c["nu"]), tuple(c["branches"]), _vec(c["subgradient"]))
            results.append(("m_stat", verify_mcert(p, x, cert)))
        elif sec["check"] == "fjm" and det.get("verdict") == "Proved":
            c = det["certificate"]["fjmcert"]
            cert = FJMCert(as_fraction(c["lam0"]), _vec(c["lam"]), _vec(c["nu"]), tuple(c["branches"]))
            results.append(("fjm", verify_fjm(p, x, cert)))
        elif sec["check"] in ("am_reg", "dam_reg", "ccp") and det.get("verdict") == "Refuted":
            w = det["witness"]
            ok = True
            from .stationarity import reference_cone
            if "limit" in w and p.has_gk:
                ok = reference_cone(p, x).contains(_vec(w["limit"])) is None
            for f in w.get("finite_k", []):
                z = None if f.get("z") is None else _vec(f["z"])
                mem = Member(_vec(f["lambda"]), _vec(f["nu"]), ())
                ok = ok and verify_membership(p.gc, _vec(f["x"]), _vec(f["y"]), _vec(f["xstar"]), mem, z)
            results.append((sec["check"], ok))
    for name, ok in results:
        print(f"{name:15s} {'verified' if ok else 'FAILED'}")
    if not results:
        print("no exact certificates in the report")
    return 0 if all(ok for _, ok in results) else 1


# ------------------------------------------------------------ penalty

def cmd_penalty(args):
    from .penalty import PenaltyConfig, am_trace, trace_csv
    from .stationarity import classify_trace
    p = _load(args.file)
    try:
        kmax = float(args.kmax)
    except ValueError:
        raise Usage(f"bad --kmax {args.kmax!r}") from None
    if kmax < 1:
        raise Usage("--kmax must be at least 1")
    cfg = PenaltyConfig.up_to(kmax, tol=args.tol, decoupled=args.decoupled)
    trace = am_trace(p, None, cfg)
    cls = classify_trace(trace, p)
    table = trace_csv(trace)
    if args.csv:
        Path(args.csv).write_text(table, encoding="utf-8")
    if args.json:
        _emit_json({"id": p.id, "status": trace.status, "classification": cls.to_json(),
                    "records": [jsonable(r) for r in trace.records]})
    else:
        if not args.csv:
            sys.stdout.write(table)
        print(f"status: {trace.status}")
        print("classification: " + json.dumps(cls.to_json(), ensure_ascii=False))
    return 0


# ------------------------------------------------------------ cone

def _tangent_union(S, y):
    from .polyhedral import tangent_cone_union
    if not S.contains(y):
        raise ValueError("point is not in the set")
    if S.whole_space:
        return ConeUnion([h_to_cone(HPolyhedron.whole_space(S.dim))])
    if not S.is_polyhedral:
        raise ValueError("tangent cones are computed for polyhedral blocks only")
    return ConeUnion([h_to_cone(T) for T in tangent_cone_union(S, y)], S.dim).pruned()


def cmd_cone(args):
    from .stationarity import linearization_cone
    p = _load(args.file)
    if args.kind == "linearization":
        x = _point(args.point, p.n) or p.point
        U = linearization_cone(p, x)
    else:
        if args.set == "K":
            if not p.has_gk:
                raise ValueError("the problem has no K")
            S = p.K
            y = _point(args.point, S.dim) or p.G.eval(p.point)
        elif args.set == "C":
            S = p.C
            y = _point(args.point, p.n) or p.point
        else:
            if p.M_explicit is None:
                raise ValueError("the problem has no M_explicit")
            S = p.M_explicit
            y = _point(args.point, p.n) or p.point
        if not S.contains(y):
            raise ValueError("point is not in the set")
        if args.kind == "tangent":
            U = _tangent_union(S, y)
        elif args.kind == "regular":
            if S.whole_space:
                U = normal_cone(S, y)
            else:
                U = ConeUnion([regular_normal_cone(S, y)])
        else:
            U = normal_cone(S, y)
    if args.json:
        _emit_json({"kind": args.kind, "set": args.set, "branches": U.to_json()})
    else:
        for i, b in enumerate(U.branches):
            rays = "; ".join("(" + ",".join(jsonable(r)) + ")" for r in b.rays) or "none"
            lin = "; ".join("(" + ",".join(jsonable(r)) + ")" for r in b.lineality) or "none"
            print(f"branch {i}: rays {rays}; lineality {lin}")
    return 0


# ------------------------------------------------------------ catalog and rules

def cmd_catalog(args):
    from .catalog import catalog_table, run_catalog
    cfg = SamplerConfig(seed=args.seed)
    rep = run_catalog(args.filter, cfg)
    if args.json:
        _emit_json(rep.to_json())
    else:
        print(catalog_table(rep))
    return 0 if rep.hard_failures == 0 else 1


def cmd_rules(args):
    from .calculus import asymptotic_stability_check, intersection_rule_check, preimage_rule_check
    p = _load(args.file)
    out = {"preimage": preimage_rule_check(p).to_json()}
    if p.has_gk and p.K.dim == p.n and all(str(c) == v for c, v in zip(p.G.components, p.variables)):
        # G is the identity, so K and C live in one space and meet at x̄
        out["intersection"] = intersection_rule_check(p.K, p.C, p.point).to_json()
        out["asymptotic_stability"] = asymptotic_stability_check(p.K, p.C, p.point).to_json()
    if args.json:
        _emit_json(out)
    else:
        for k, v in out.items():
            print(f"{k:22s} {v['verdict']}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="vacone", description="Stationarity and regularity checks for "
                                 "geometrically constrained programs with exact polyhedral geometry.")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the checkers on a problem file")
    a.add_argument("file")
    a.add_argument("--point", help="comma-separated coordinates, e.g. 0,1/2")
    a.add_argument("--checks", help="comma-separated subset of: " + ", ".join(ALL_CHECKS))
    a.add_argument("--seed", type=int, default=default_seed())
    a.add_argument("--samples", type=int, default=64, help="random directions for the line sampler")
    a.add_argument("--json", action="store_true")
    a.add_argument("--out", help="also write the JSON report here")
    a.add_argument("--verify", metavar="REPORT", help="re-check the exact certificates of a saved report")
    a.set_defaults(func=cmd_analyze)

    pn = sub.add_parser("penalty", help="quadratic-penalty trace and its classification")
    pn.add_argument("file")
    pn.add_argument("--kmax", default="1e6")
    pn.add_argument("--tol", type=float, help="inner gradient tolerance for every k")
    pn.add_argument("--csv", help="write the trace table here")
    pn.add_argument("--decoupled", action="store_true", help="keep x in C instead of penalizing it")
    pn.add_argument("--json", action="store_true")
    pn.set_defaults(func=cmd_penalty)

    c = sub.add_parser("cone", help="print a tangent or normal cone")
    c.add_argument("file")
    c.add_argument("--set", choices=["K", "C", "M"], default="K")
    c.add_argument("--point")
    c.add_argument("--kind", choices=["tangent", "regular", "limiting", "linearization"], default="limiting")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_cone)

    g = sub.add_parser("catalog", help="run the example catalog against its expected verdicts")
    g.add_argument("--filter")
    g.add_argument("--seed", type=int, default=default_seed())
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_catalog)

    r = sub.add_parser("rules", help="normal-cone calculus rules at the reference point")
    r.add_argument("file")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_rules)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        return args.func(args)
    except (SchemaError, Usage, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, NotImplementedError, CapacityError, ZeroDivisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
