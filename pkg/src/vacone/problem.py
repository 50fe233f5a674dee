"""Problem instances and the JSON problem-file format (schema_version 1).

A problem file looks like::

    {
      "schema_version": 1,
      "id": "ex_nlp",
      "variables": ["x1", "x2"],
      "objective": {"kind": "polynomial", "expr": "x1 + x2"},
      "G": ["x1^2 - x2"],
      "K": {"union": [{"rows": [["1", "0", "le"]]}]},
      "C": {"union": [...]},                 # optional, default R^n
      "point": ["0", "0"],
      "M_explicit": {"union": [...]},        # optional
      "expected": {"m_stat": "Proved"}       # optional
    }

Numbers are exact: integers or "p/q" strings.  Floats are rejected.
A row ``[a_1, ..., a_d, rhs, kind]`` means ``a . y <= rhs`` (kind "le"),
``a . y >= rhs`` ("ge") or ``a . y = rhs`` ("eq").  A smooth convex block is
``{"smooth": ["y1^2 - y2"], "slater": ["0", "1"]}`` and means every listed
polynomial is <= 0; its variables are ``K_variables`` (default y1..yl) for K
and the problem variables for C.

A piecewise objective is
``{"kind": "piecewise", "pieces": [{"rows": [...], "expr": "-x"}, ...],
"convexify": false}``; each piece is a polynomial valid on its closed
region.  With ``convexify`` false the subdifferential at a kink is the union
of the active pieces' gradients, otherwise their convex hull.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .expr import ParseError, PolyMap, Polynomial, as_fraction, parse_polynomial
from .maps import GeometricConstraint
from .polyhedral import ConeUnion, GenCone, HPolyhedron, PolyUnion, SmoothConvexBlock
from .polyhedral.cones import _fstr

SCHEMA_VERSION = 1

VERDICT_KEYS = {
    "m_stat", "am_stat", "dam_stat", "fjm", "nnamcq", "polyhedral", "am_reg", "dam_reg", "gacq",
    "ggcq", "subreg_probe", "linearization", "consequence", "criterion_flag", "ccp", "preimage",
}


class SchemaError(ValueError):
    def __init__(self, message, entry=None):
        self.entry = entry
        super().__init__(f"{entry}: {message}" if entry else message)


# ------------------------------------------------------------------ objective

class SubdiffOracle:
    """Piecewise-polynomial objective with a finite subdifferential model."""

    def __init__(self, variables, pieces, convexify=False):
        self.variables = tuple(variables)
        self.pieces = tuple(pieces)  # (HPolyhedron region, Polynomial)
        if not self.pieces:
            raise ValueError("objective needs at least one piece")
        self.convexify = convexify
        self._grads = [p.gradient() for _, p in self.pieces]

    @classmethod
    def smooth(cls, poly: Polynomial):
        return cls(poly.variables, [(HPolyhedron.whole_space(poly.nvars), poly)])

    @property
    def n(self):
        return len(self.variables)

    @property
    def is_smooth(self) -> bool:
        return len(self.pieces) == 1 and self.pieces[0][0].nrows == 0

    def active(self, x):
        return [i for i, (reg, _) in enumerate(self.pieces) if reg.contains(x)]

    def value(self, x):
        act = self.active(x)
        if not act:
            raise ValueError("point not covered by any objective piece")
        return self.pieces[act[0]][1].eval(x)

    def gradient_of(self, i, x):
        return tuple(g.eval(x) for g in self._grads[i])

    def subgradients(self, x):
        """List of polytopes (vertex lists) whose union is ∂f(x)."""
        act = self.active(x)
        if not act:
            raise ValueError("point not covered by any objective piece")
        grads = []
        for i in act:
            g = self.gradient_of(i, x)
            if g not in grads:
                grads.append(g)
        if self.convexify:
            return [grads]
        return [[g] for g in grads]

    def directional_subgradients(self, x, d):
        """Limits of gradients along x + t d, t -> 0+ (pieces containing that ray)."""
        out = []
        for i, (reg, _) in enumerate(self.pieces):
            if not reg.contains(x):
                continue
            ok = True
            for row, bi, e in zip(reg.A, reg.b, reg.eq_mask):
                ad = sum((a * v for a, v in zip(row, d)), Fraction(0))
                tight = sum((a * v for a, v in zip(row, x)), Fraction(0)) == bi
                if e and ad != 0 or (not e and tight and ad > 0):
                    ok = False
                    break
            if ok:
                g = self.gradient_of(i, x)
                if g not in out:
                    out.append(g)
        return out

    # float side, for the penalty solver
    def _piece_float(self, x):
        for i, (reg, _) in enumerate(self.pieces):
            if reg.contains_float(x, 0.0):
                return i
        # fall back to the least-violated region
        best, bi = None, 0
        for i, (reg, _) in enumerate(self.pieces):
            viol = max([0.0] + [-(float(b) - sum(float(a) * v for a, v in zip(r, x))) for r, b in zip(reg.A, reg.b)])
            if best is None or viol < best:
                best, bi = viol, i
        return bi

    def near_kink(self, x, tol=1e-12) -> bool:
        if self.is_smooth:
            return False
        hits = 0
        for reg, _ in self.pieces:
            if reg.contains_float(x, tol):
                hits += 1
        return hits > 1

    def value_float(self, x):
        return self.pieces[self._piece_float(x)][1].eval_float(x)

    def gradient_float(self, x):
        i = self._piece_float(x)
        return [g.eval_float(x) for g in self._grads[i]]

    def to_dict(self):
        if self.is_smooth:
            return {"kind": "polynomial", "expr": str(self.pieces[0][1])}
        return {"kind": "piecewise", "convexify": self.convexify,
                "pieces": [{"rows": reg.to_rows(), "expr": str(p)} for reg, p in self.pieces]}


# ------------------------------------------------------------------ instance

@dataclass
class ProblemInstance:
    id: str
    variables: tuple
    objective: SubdiffOracle
    G: PolyMap | None
    K: PolyUnion | None
    C: PolyUnion
    point: tuple
    K_variables: tuple = ()
    M_explicit: PolyUnion | None = None
    expected: dict = field(default_factory=dict)
    title: str = ""
    note: str = ""
    local_minimizer: bool | None = None
    analytic: dict | None = None
    replay: list = field(default_factory=list)
    raw: dict | None = None

    @property
    def n(self):
        return len(self.variables)

    @property
    def has_gk(self) -> bool:
        return self.G is not None and self.K is not None

    @property
    def gc(self) -> GeometricConstraint:
        if not self.has_gk:
            raise ValueError(f"{self.id}: instance has no (G, K) description")
        return GeometricConstraint(self.G, self.K, self.C)

    def feasible(self, x=None) -> bool:
        x = self.point if x is None else tuple(as_fraction(v) for v in x)
        if self.has_gk:
            return self.gc.feasible(x)
        return self.C.contains(x)

    def with_point(self, x):
        import copy
        q = copy.copy(self)
        q.point = tuple(as_fraction(v) for v in x)
        return q

    def to_dict(self):
        return dump_problem(self)


# ------------------------------------------------------------------ parsing

def _num(v, entry):
    if isinstance(v, bool) or isinstance(v, float):
        raise SchemaError(f"number {v!r} must be an integer or a 'p/q' string", entry)
    try:
        return as_fraction(v)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise SchemaError(f"bad rational {v!r}: {e}", entry) from None


def _vec(vals, entry, dim=None, what="vector"):
    if not isinstance(vals, list):
        raise SchemaError(f"{what} must be a list", entry)
    out = tuple(_num(v, entry) for v in vals)
    if dim is not None and len(out) != dim:
        raise SchemaError(f"{what} has length {len(out)}, expected {dim}", entry)
    return out


def _rows(rows, dim, entry):
    if not isinstance(rows, list):
        raise SchemaError("rows must be a list", entry)
    A, b, eq = [], [], []
    for r in rows:
        if not isinstance(r, list) or len(r) != dim + 2:
            raise SchemaError(f"row {r!r} must have {dim} coefficients, a right-hand side and a kind", entry)
        kind = r[-1]
        if kind not in ("le", "ge", "eq"):
            raise SchemaError(f"row kind must be 'le', 'ge' or 'eq', got {kind!r}", entry)
        a = [_num(v, entry) for v in r[:dim]]
        rhs = _num(r[dim], entry)
        if kind == "ge":
            a, rhs = [-v for v in a], -rhs
        A.append(a)
        b.append(rhs)
        eq.append(kind == "eq")
    return HPolyhedron(A, b, eq, dim)


def _poly(text, variables, entry):
    if not isinstance(text, str):
        raise SchemaError(f"expression must be a string, got {text!r}", entry)
    try:
        return parse_polynomial(text, variables)
    except ParseError as e:
        raise SchemaError(f"cannot parse {text!r}: {e}", entry) from None


def parse_union(spec, dim, variables, entry):
    if not isinstance(spec, dict) or "union" not in spec:
        raise SchemaError("a set must be an object with a 'union' list", entry)
    blocks = []
    for blk in spec["union"]:
        if not isinstance(blk, dict):
            raise SchemaError("union blocks must be objects", entry)
        if "rows" in blk:
            blocks.append(_rows(blk["rows"], dim, entry))
        elif "smooth" in blk:
            polys = [_poly(t, variables, entry) for t in blk["smooth"]]
            if "slater" not in blk:
                raise SchemaError("smooth block needs a 'slater' point", entry)
            try:
                blocks.append(SmoothConvexBlock(polys, _vec(blk["slater"], entry, dim, "slater point")))
            except ValueError as e:
                raise SchemaError(str(e), entry) from None
        else:
            raise SchemaError("union block needs 'rows' or 'smooth'", entry)
    if not blocks:
        raise SchemaError("union must contain at least one block", entry)
    try:
        return PolyUnion(blocks)
    except ValueError as e:
        raise SchemaError(str(e), entry) from None


def dump_union(S: PolyUnion, variables=None):
    out = []
    for b in S.blocks:
        if isinstance(b, HPolyhedron):
            out.append({"rows": b.to_rows()})
        else:
            out.append({"smooth": [str(p) for p in b.polys], "slater": [_fstr(v) for v in b.slater_point]})
    return {"union": out}


def parse_cone_union(spec, dim, entry):
    if not isinstance(spec, list) or not spec:
        raise SchemaError("cone union must be a nonempty list of branches", entry)
    branches = []
    for br in spec:
        rays = [_vec(r, entry, dim, "ray") for r in br.get("rays", [])]
        lin = [_vec(r, entry, dim, "lineality vector") for r in br.get("lineality", [])]
        branches.append(GenCone(rays, lin, dim))
    return ConeUnion(branches, dim)


def dump_cone_union(U: ConeUnion):
    out = []
    for b in U.branches:
        d = {}
        d["rays"] = [[_fstr(v) for v in r] for r in b.rays]
        d["lineality"] = [[_fstr(v) for v in r] for r in b.lineality]
        out.append(d)
    return out


def _parse_analytic(spec, n, entry):
    if not isinstance(spec, dict) or "reference_cone" not in spec:
        raise SchemaError("analytic section needs a 'reference_cone'", entry)
    out = {"reference_cone": parse_cone_union(spec["reference_cone"], n, entry), "note": spec.get("note", "")}
    for key in ("decoupled_cells", "coupled_cells"):
        cells = []
        for c in spec.get(key, []):
            cells.append({
                "label": c.get("label", ""),
                "cone": parse_cone_union(c["cone"], n, entry),
                "subgradients": [_vec(s, entry, n, "subgradient") for s in c["subgradients"]],
            })
        out[key] = cells
    return out


def _dump_analytic(a):
    out = {"note": a.get("note", ""), "reference_cone": dump_cone_union(a["reference_cone"])}
    for key in ("decoupled_cells", "coupled_cells"):
        out[key] = [{"label": c["label"], "cone": dump_cone_union(c["cone"]),
                     "subgradients": [[_fstr(v) for v in s] for s in c["subgradients"]]}
                    for c in a[key]]
    return out


def _parse_objective(spec, variables, entry):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SchemaError("objective must be an object with a 'kind'", entry)
    if spec["kind"] == "polynomial":
        return SubdiffOracle.smooth(_poly(spec.get("expr"), variables, entry))
    if spec["kind"] == "piecewise":
        pieces = []
        for pc in spec.get("pieces", []):
            pieces.append((_rows(pc["rows"], len(variables), entry), _poly(pc["expr"], variables, entry)))
        if not pieces:
            raise SchemaError("piecewise objective needs pieces", entry)
        return SubdiffOracle(variables, pieces, bool(spec.get("convexify", False)))
    raise SchemaError(f"unknown objective kind {spec['kind']!r}", entry)


def _parse_replay(items, entry):
    out = []
    for it in items:
        if it.get("kind") not in ("am_sequence", "m_membership"):
            raise SchemaError(f"unknown replay kind {it.get('kind')!r}", entry)
        seq = {"kind": it["kind"], "ks": [int(k) for k in it["ks"]], "note": it.get("note", "")}
        for key in ("x", "y", "z", "lambda", "nu", "eps", "xstar"):
            if key in it:
                terms = []
                for pair in it[key]:
                    if not (isinstance(pair, list) and len(pair) == 2):
                        raise SchemaError(f"replay field {key} must hold [numerator, denominator] pairs", entry)
                    terms.append((_poly(pair[0], ["k"], entry), _poly(pair[1], ["k"], entry)))
                seq[key] = terms
        out.append(seq)
    return out


def _dump_replay(items):
    out = []
    for it in items:
        d = {"kind": it["kind"], "ks": list(it["ks"]), "note": it["note"]}
        for key in ("x", "y", "z", "lambda", "nu", "eps", "xstar"):
            if key in it:
                d[key] = [[str(a), str(b)] for a, b in it[key]]
        out.append(d)
    return out


def eval_sequence(terms, k):
    """Evaluate [(num(k), den(k))] pairs at an integer k."""
    out = []
    for num, den in terms:
        d = den.eval([k])
        if d == 0:
            raise ZeroDivisionError("sequence denominator vanishes")
        out.append(num.eval([k]) / d)
    return tuple(out)


def load_problem(source, entry=None) -> ProblemInstance:
    """Build a ProblemInstance from a dict, JSON text or a path."""
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
        path = Path(source)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e}", entry or path.name) from None
    elif isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e}", entry) from None
    else:
        data = source
    if not isinstance(data, dict):
        raise SchemaError("problem file must hold a JSON object", entry)
    entry = data.get("id", entry)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"schema_version must be {SCHEMA_VERSION}", entry)
    variables = data.get("variables")
    if not isinstance(variables, list) or not variables or not all(isinstance(v, str) for v in variables):
        raise SchemaError("'variables' must be a nonempty list of names", entry)
    n = len(variables)
    if "objective" not in data:
        raise SchemaError("missing 'objective'", entry)
    objective = _parse_objective(data["objective"], variables, entry)
    G = K = None
    kvars = ()
    if "G" in data or "K" in data:
        if "G" not in data or "K" not in data:
            raise SchemaError("'G' and 'K' must be given together", entry)
        if not isinstance(data["G"], list) or not data["G"]:
            raise SchemaError("'G' must be a nonempty list of expressions", entry)
        G = PolyMap([_poly(t, variables, entry) for t in data["G"]], variables)
        ell = G.codomain_dim
        kvars = tuple(data.get("K_variables", [f"y{i + 1}" for i in range(ell)]))
        if len(kvars) != ell:
            raise SchemaError("'K_variables' must match the number of G components", entry)
        K = parse_union(data["K"], ell, list(kvars), entry)
    elif "analytic" not in data:
        raise SchemaError("need 'G' and 'K' or an 'analytic' section", entry)
    C = parse_union(data["C"], n, variables, entry) if "C" in data else PolyUnion.everything(n)
    if "point" not in data:
        raise SchemaError("missing 'point'", entry)
    point = _vec(data["point"], entry, n, "point")
    M = parse_union(data["M_explicit"], n, variables, entry) if "M_explicit" in data else None
    expected = data.get("expected", {})
    if not isinstance(expected, dict):
        raise SchemaError("'expected' must be an object", entry)
    for key, val in expected.items():
        if key not in VERDICT_KEYS:
            raise SchemaError(f"unknown expected verdict key {key!r}", entry)
        if not isinstance(val, str):
            raise SchemaError(f"expected verdict for {key!r} must be a string", entry)
    analytic = _parse_analytic(data["analytic"], n, entry) if "analytic" in data else None
    replay = _parse_replay(data.get("replay", []), entry)
    lm = data.get("local_minimizer")
    if lm is not None and not isinstance(lm, bool):
        raise SchemaError("'local_minimizer' must be true or false", entry)
    return ProblemInstance(
        id=entry or "problem", variables=tuple(variables), objective=objective, G=G, K=K, C=C,
        point=point, K_variables=kvars, M_explicit=M, expected=dict(expected),
        title=data.get("title", ""), note=data.get("note", ""), local_minimizer=lm,
        analytic=analytic, replay=replay, raw=data)


def dump_problem(p: ProblemInstance) -> dict:
    """Canonical dict form; load_problem(dump_problem(p)) reproduces p."""
    d = {"schema_version": SCHEMA_VERSION, "id": p.id}
    if p.title:
        d["title"] = p.title
    if p.note:
        d["note"] = p.note
    d["variables"] = list(p.variables)
    d["objective"] = p.objective.to_dict()
    if p.has_gk:
        d["G"] = [str(c) for c in p.G.components]
        d["K_variables"] = list(p.K_variables)
        d["K"] = dump_union(p.K)
    if not p.C.whole_space:
        d["C"] = dump_union(p.C)
    d["point"] = [_fstr(v) for v in p.point]
    if p.M_explicit is not None:
        d["M_explicit"] = dump_union(p.M_explicit)
    if p.local_minimizer is not None:
        d["local_minimizer"] = p.local_minimizer
    if p.analytic is not None:
        d["analytic"] = _dump_analytic(p.analytic)
    if p.replay:
        d["replay"] = _dump_replay(p.replay)
    if p.expected:
        d["expected"] = dict(sorted(p.expected.items()))
    return d
