"""Quadratic-penalty traces that certify AM-stationarity numerically.

For each k the reduced penalty

    θ_k(x) = f(x) + k/2 dist²(G(x), K) + k/2 dist²(x, C) + 1/2 |x - x_ref|²

is minimized to a small gradient norm (BFGS with Armijo backtracking, warm
started along the schedule).  Its gradient is exactly
∇f + G'ᵀλ + ν + (x - x_ref) with λ = k (G - Π_K G) and ν = k (x - Π_C x).
In decoupled mode x is kept in C by projected gradient steps and C is not
penalized.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .polyhedral import HPolyhedron, project
from .problem import ProblemInstance
from .stationarity import AMTrace, TraceRecord, classify_trace

ARMIJO = 1e-4


@dataclass
class PenaltyConfig:
    k_schedule: tuple = tuple(10.0 ** j for j in range(7))
    tol_schedule: tuple | None = None
    tol_floor: float = 1e-9
    max_iter: int = 500
    trust_radius: float = 1.0
    n_starts: int = 2
    decoupled: bool = False

    def __post_init__(self):
        ks = list(self.k_schedule)
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("k schedule must be strictly increasing")
        if self.tol_schedule is None:
            self.tol_schedule = tuple(max(1e-2 / k, self.tol_floor) for k in ks)
        if len(self.tol_schedule) != len(ks):
            raise ValueError("one tolerance per k")

    @classmethod
    def up_to(cls, kmax: float, tol: float | None = None, **kw):
        ks, j = [], 0
        while 10.0 ** j <= kmax * (1 + 1e-12):
            ks.append(10.0 ** j)
            j += 1
        tols = None if tol is None else tuple(tol for _ in ks)
        return cls(k_schedule=tuple(ks), tol_schedule=tols, **kw)


@dataclass
class PenaltyState:
    x: np.ndarray
    gx: np.ndarray
    proj_K: np.ndarray | None
    proj_C: np.ndarray | None
    value: float
    grad: np.ndarray
    branch: tuple
    lam: np.ndarray
    nu: np.ndarray


def _eval(p: ProblemInstance, k, x_ref, x, with_C=True) -> PenaltyState:
    x = np.asarray(x, dtype=float)
    val = p.objective.value_float(x)
    grad = np.asarray(p.objective.gradient_float(x), dtype=float)
    bK = bC = -1
    lam = np.zeros(p.G.codomain_dim if p.has_gk else 0)
    nu = np.zeros(p.n)
    gx = pk = pc = None
    if p.has_gk:
        gx = np.asarray(p.G.eval_float(x), dtype=float)
        pk, dK, bK = project(p.K, gx)
        r = gx - pk
        lam = k * r
        val += 0.5 * k * float(r @ r)
        J = np.asarray(p.G.jacobian_float(x), dtype=float).reshape(len(gx), p.n)
        grad = grad + J.T @ lam
    if with_C and not p.C.whole_space:
        pc, dC, bC = project(p.C, x)
        r = x - pc
        nu = k * r
        val += 0.5 * k * float(r @ r)
        grad = grad + nu
    d = x - x_ref
    val += 0.5 * float(d @ d)
    grad = grad + d
    return PenaltyState(x, gx, pk, pc, val, grad, (bK, bC), lam, nu)


def penalty_objective(p: ProblemInstance, k, x_ref, x):
    """(θ_k(x), ∇θ_k(x), (K block, C block)) at a float point."""
    s = _eval(p, k, np.asarray([float(v) for v in x_ref]), x)
    return s.value, s.grad, s.branch


@dataclass
class SolveReport:
    x: np.ndarray
    state: PenaltyState
    iterations: int
    status: str


def _project_C(p, x):
    if p.C.whole_space:
        return x
    return np.asarray(project(p.C, x)[0], dtype=float)


def _decoupled_residual(p, k, x_ref, s: PenaltyState):
    """Projected-gradient residual and the N_C element it induces."""
    w = s.x - s.grad
    xp = _project_C(p, w)
    nu = w - xp
    return np.linalg.norm(xp - s.x), nu


def solve_subproblem(p: ProblemInstance, k, x_ref, x0, tol, cfg: PenaltyConfig | None = None) -> SolveReport:
    """Minimize θ_k from x0 until the gradient norm drops below tol."""
    cfg = cfg or PenaltyConfig()
    x_ref = np.asarray(x_ref, dtype=float)
    dec = cfg.decoupled and not p.C.whole_space
    x = np.asarray(x0, dtype=float)
    if dec:
        x = _project_C(p, x)
    f = lambda z: _eval(p, k, x_ref, z, with_C=not dec)
    s = f(x)
    n = len(x)
    H = np.eye(n)
    status = "max_iter"
    it = 0
    for it in range(cfg.max_iter):
        res = _decoupled_residual(p, k, x_ref, s)[0] if dec else np.linalg.norm(s.grad)
        if res <= tol:
            status = "converged"
            break
        d = -(H @ s.grad)
        if dec:
            d = _project_C(p, s.x + d) - s.x
        slope = float(s.grad @ d)
        if slope >= 0:
            H = np.eye(n)
            d = -s.grad if not dec else _project_C(p, s.x - s.grad) - s.x
            slope = float(s.grad @ d)
        if p.objective.near_kink(s.x):
            s = f(s.x + 1e-9 * d / max(np.linalg.norm(d), 1e-300))
            continue
        t, new = 1.0, None
        while t > 1e-16:
            cand = f(s.x + t * d)
            if cand.value <= s.value + ARMIJO * t * slope:
                new = cand
                break
            t *= 0.5
        if new is None:
            # values have hit rounding level: fall back to gradient-norm decrease
            t = 1.0
            while t > 1e-16:
                cand = f(s.x + t * d)
                if np.linalg.norm(cand.grad) < np.linalg.norm(s.grad):
                    new = cand
                    break
                t *= 0.5
        if new is None:
            status = "line_search_failed"
            break
        sk = new.x - s.x
        yk = new.grad - s.grad
        sy = float(sk @ yk)
        if sy > 1e-300:
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(sk, yk)
            H = V @ H @ V.T + rho * np.outer(sk, sk)
        s = new
    return SolveReport(s.x, s, it, status)


def _normal_residual(S, point, vec, block):
    """Relative distance of vec from the normal cone of S's chosen block at point."""
    if S.whole_space or block < 0 or not len(vec):
        return 0.0
    B = S.blocks[block]
    if not isinstance(B, HPolyhedron):
        return 0.0  # smooth blocks: projection optimality makes vec a normal
    cols = []
    for a, b, e in zip(B.A, B.b, B.eq_mask):
        af = np.asarray([float(v) for v in a])
        if e:
            cols += [af, -af]
        elif abs(float(b) - af @ point) <= 1e-7 * (1 + np.abs(point).max(initial=0)):
            cols.append(af)
    nv = np.linalg.norm(vec)
    if nv == 0:
        return 0.0
    if not cols:
        return 1.0
    A = np.column_stack(cols)
    _, r = nnls(A, np.asarray(vec, dtype=float))
    return r / nv


def am_trace(p: ProblemInstance, xbar=None, cfg: PenaltyConfig | None = None) -> AMTrace:
    cfg = cfg or PenaltyConfig()
    xbar_q = p.point if xbar is None else tuple(xbar)
    if not p.feasible(xbar_q):
        raise ValueError(f"{p.id}: reference point is not feasible")
    if not p.has_gk:
        raise ValueError(f"{p.id}: penalty traces need a (G, K) description")
    x_ref = np.asarray([float(v) for v in xbar_q])
    rng = np.random.default_rng(0)
    starts_extra = [x_ref + cfg.trust_radius * 0.1 * rng.standard_normal(len(x_ref))
                    for _ in range(max(0, cfg.n_starts - 1))]
    dec = cfg.decoupled and not p.C.whole_space
    recs = []
    x = x_ref.copy()
    status = "complete"
    for j, (k, tol) in enumerate(zip(cfg.k_schedule, cfg.tol_schedule)):
        starts = [x] + (starts_extra if j == 0 else [])
        best = None
        for x0 in starts:
            r = solve_subproblem(p, k, x_ref, x0, tol, cfg)
            inside = np.linalg.norm(r.x - x_ref) <= cfg.trust_radius
            key = (r.status != "converged", not inside, r.state.value)
            if best is None or key < best[0]:
                best = (key, r)
        r = best[1]
        s = r.state
        x = r.x
        nu = s.nu
        if dec:
            gnorm, nu = _decoupled_residual(p, k, x_ref, s)
            eps = s.grad + nu
        else:
            eps = s.grad
        y = s.gx - s.proj_K
        nres = _normal_residual(p.K, s.proj_K, s.lam, s.branch[0])
        rec_status = r.status if nres <= 1e-6 else f"{r.status}; multiplier off the normal cone ({nres:.2e})"
        recs.append(TraceRecord(k=k, x=x.tolist(), y=y.tolist(), lam=s.lam.tolist(), nu=np.asarray(nu).tolist(),
                                eps=np.asarray(eps).tolist(), inner_tol=tol, branch=s.branch, status=rec_status))
        if r.status == "line_search_failed":
            status = f"truncated at k={k:g}: {r.status}"
            break
    return AMTrace(recs, xbar_q, status)


def am_residual(rec: TraceRecord, xbar):
    """∇f + G'ᵀλ + ν at x_k, i.e. the recorded θ-gradient minus the proximal part."""
    return [e - (a - float(b)) for e, a, b in zip(rec.eps, rec.x, xbar)]


def trace_csv(trace: AMTrace) -> str:
    n = len(trace.records[0].x) if trace.records else 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k"] + [f"x{i + 1}" for i in range(n)] + ["y_norm", "lambda_norm", "eps_norm", "branch"])
    g = lambda v: f"{float(v):.17g}"
    for r in trace.records:
        w.writerow([g(r.k)] + [g(v) for v in r.x] + [g(np.linalg.norm(r.y)), g(np.linalg.norm(r.lam)),
                                                      g(np.linalg.norm(r.eps)), f"{r.branch[0]}/{r.branch[1]}"])
    return buf.getvalue()


def trace_and_classify(p: ProblemInstance, cfg: PenaltyConfig | None = None):
    t = am_trace(p, None, cfg)
    return t, classify_trace(t, p)
