"""Unions of convex blocks and Euclidean projection onto them."""
from __future__ import annotations

import logging
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from ..expr import as_vector
from . import linalg
from .cones import HPolyhedron, check_capacity

log = logging.getLogger(__name__)


class SmoothConvexBlock:
    """{y | g_j(y) <= 0 for all j} with polynomial g_j.

    Convexity of the g_j is asserted by the caller, not checked; the Slater
    point must satisfy every g_j strictly.
    """

    def __init__(self, polys, slater_point, convex_asserted=True):
        polys = tuple(polys)
        if not polys:
            raise ValueError("a smooth block needs at least one defining polynomial")
        self.polys = polys
        self.dim = polys[0].nvars
        if any(p.nvars != self.dim for p in polys):
            raise ValueError("defining polynomials must share their variables")
        self.slater_point = as_vector(slater_point)
        if len(self.slater_point) != self.dim:
            raise ValueError("Slater point has the wrong dimension")
        if not all(p.eval(self.slater_point) < 0 for p in polys):
            raise ValueError("Slater point does not satisfy the constraints strictly")
        self.convex_asserted = convex_asserted
        self._grads = [p.gradient() for p in polys]
        self._hess = [[g.gradient() for g in grad] for grad in self._grads]

    def values(self, y):
        return [p.eval(y) for p in self.polys]

    def contains(self, y) -> bool:
        return all(v <= 0 for v in self.values(as_vector(y)))

    def contains_float(self, y, tol=1e-12) -> bool:
        return all(p.eval_float(y) <= tol for p in self.polys)

    def active(self, y):
        return [j for j, v in enumerate(self.values(as_vector(y))) if v == 0]

    def gradient(self, j, y):
        return tuple(g.eval(y) for g in self._grads[j])

    def gradient_float(self, j, y):
        return np.array([g.eval_float(y) for g in self._grads[j]])

    def hessian_float(self, j, y):
        return np.array([[h.eval_float(y) for h in row] for row in self._hess[j]])

    def __repr__(self):
        return "SmoothConvexBlock(" + "; ".join(f"{p} <= 0" for p in self.polys) + ")"


class PolyUnion:
    """Finite union of HPolyhedron / SmoothConvexBlock blocks."""

    def __init__(self, blocks, whole_space=False):
        blocks = list(blocks)
        if not blocks:
            raise ValueError("a union needs at least one block")
        dim = blocks[0].dim
        if any(b.dim != dim for b in blocks):
            raise ValueError("blocks must share the ambient dimension")
        for b in blocks:
            if isinstance(b, HPolyhedron):
                check_capacity(b.nrows, b.dim, "block")
        self.blocks = tuple(blocks)
        self.dim = dim
        self.whole_space = whole_space

    @classmethod
    def everything(cls, dim):
        return cls([HPolyhedron.whole_space(dim)], whole_space=True)

    @classmethod
    def single(cls, block):
        return cls([block])

    @property
    def is_polyhedral(self) -> bool:
        return all(isinstance(b, HPolyhedron) for b in self.blocks)

    def contains(self, y) -> bool:
        y = as_vector(y)
        if len(y) != self.dim:
            raise ValueError("dimension mismatch")
        return any(b.contains(y) for b in self.blocks)

    def contains_float(self, y, tol=1e-12) -> bool:
        return any(b.contains_float(y, tol) for b in self.blocks)

    def blocks_containing(self, y):
        y = as_vector(y)
        return [i for i, b in enumerate(self.blocks) if b.contains(y)]

    def __repr__(self):
        return f"PolyUnion({list(self.blocks)!r})"


# ------------------------------------------------------------------ projection

def _independent_eq(block: HPolyhedron):
    """Independent equality rows with right-hand sides; None if inconsistent."""
    rows = [list(a) + [bi] for a, bi, e in zip(block.A, block.b, block.eq_mask) if e]
    if not rows:
        return [], []
    R, piv = linalg.rref(rows, block.dim + 1)
    if block.dim in piv:
        return None
    return [r[:-1] for r in R], [r[-1] for r in R]


def _project_polyhedron_exact(block: HPolyhedron, z):
    """Exact Euclidean projection onto a nonempty polyhedron, or None if empty.

    Active sets are tried by increasing size; the first KKT point found is the
    projection (strict convexity).  Linearly independent active rows always
    suffice by Caratheodory.
    """
    if block.contains(z):
        return tuple(z)
    eqs = _independent_eq(block)
    if eqs is None:
        return None
    Ae, be = eqs
    le = block.le_rows()
    d = block.dim
    for k in range(0, d - len(Ae) + 1):
        for W in combinations(le, k):
            A = Ae + [list(block.A[i]) for i in W]
            b = be + [block.b[i] for i in W]
            if A and linalg.rank(A, d) < len(A):
                continue
            if A:
                G = [[linalg.dot(r1, r2) for r2 in A] for r1 in A]
                rhs = [linalg.dot(r, z) - bi for r, bi in zip(A, b)]
                mu = linalg.solve_square(G, rhs)
                if mu is None:
                    continue
                if any(m < 0 for m in mu[len(Ae):]):
                    continue
                y = tuple(zi - sum((m * r[j] for m, r in zip(mu, A)), Fraction(0)) for j, zi in enumerate(z))
            else:
                y = tuple(z)
            if block.contains(y):
                return y
    if block.feasible_point() is None:
        return None
    raise RuntimeError("projection active-set search failed")


def _project_polyhedron_float(block: HPolyhedron, z, tol=1e-10):
    z = np.asarray(z, dtype=float)
    A_all = np.array([[float(v) for v in a] for a in block.A]).reshape(len(block.A), block.dim)
    b_all = np.array([float(v) for v in block.b])
    eqm = np.array(block.eq_mask, dtype=bool)
    scale = 1.0 + np.abs(z).max(initial=0.0)
    if np.all(A_all[~eqm] @ z - b_all[~eqm] <= tol * scale) and np.all(np.abs(A_all[eqm] @ z - b_all[eqm]) <= tol * scale):
        return z.copy()
    eqs = _independent_eq(block)
    if eqs is None:
        return None
    Ae = [[float(v) for v in r] for r in eqs[0]]
    be = [float(v) for v in eqs[1]]
    le = block.le_rows()
    d = block.dim
    best = None
    for k in range(0, d - len(Ae) + 1):
        for W in combinations(le, k):
            A = np.array(Ae + [list(A_all[i]) for i in W]).reshape(-1, d)
            b = np.array(be + [b_all[i] for i in W])
            if len(A):
                if np.linalg.matrix_rank(A) < len(A):
                    continue
                mu = np.linalg.solve(A @ A.T, A @ z - b)
                if np.any(mu[len(Ae):] < -tol):
                    continue
                y = z - A.T @ mu
            else:
                y = z.copy()
            viol = max(np.max(A_all[~eqm] @ y - b_all[~eqm], initial=-np.inf),
                       np.max(np.abs(A_all[eqm] @ y - b_all[eqm]), initial=-np.inf))
            if viol <= tol * scale:
                return y
            if best is None or viol < best[0]:
                best = (viol, y)
    if block.feasible_point() is None:
        return None
    # near-degenerate float case: return the least-violating KKT candidate
    return best[1] if best else None


def _project_smooth(block: SmoothConvexBlock, z, polish_steps=8):
    z = np.asarray(z, dtype=float)
    if block.contains_float(z, 0.0):
        return z.copy()
    cons = [{"type": "ineq",
             "fun": (lambda y, p=p: -p.eval_float(y)),
             "jac": (lambda y, j=j: -block.gradient_float(j, y))}
            for j, p in enumerate(block.polys)]
    res = minimize(lambda y: 0.5 * float(np.dot(y - z, y - z)), z, jac=lambda y: y - z,
                   constraints=cons, method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    y = np.asarray(res.x, dtype=float)
    # Newton polish on the KKT system of the active constraints
    act = [j for j, p in enumerate(block.polys) if abs(p.eval_float(y)) < 1e-5]
    if not act:
        return y
    grads = np.array([block.gradient_float(j, y) for j in act])
    mu, *_ = np.linalg.lstsq(grads.T, z - y, rcond=None)
    mu = np.maximum(mu, 0.0)
    d, m = len(y), len(act)
    for _ in range(polish_steps):
        grads = np.array([block.gradient_float(j, y) for j in act])
        r1 = y - z + grads.T @ mu
        r2 = np.array([block.polys[j].eval_float(y) for j in act])
        if max(np.abs(r1).max(), np.abs(r2).max()) < 1e-15:
            break
        H = np.eye(d) + sum(mu[i] * block.hessian_float(j, y) for i, j in enumerate(act))
        J = np.block([[H, grads.T], [grads, np.zeros((m, m))]])
        try:
            step = np.linalg.solve(J, -np.concatenate([r1, r2]))
        except np.linalg.LinAlgError:
            break
        y = y + step[:d]
        mu = mu + step[d:]
    return y


def project(S: PolyUnion, z):
    """(nearest point as floats, distance, block index); ties go to the lowest index.

    Rational input onto polyhedral blocks is projected exactly and converted
    at the end; float input uses the float active-set routine.
    """
    if len(z) != S.dim:
        raise ValueError("dimension mismatch")
    exact_input = all(isinstance(v, (int, Fraction)) for v in z)
    best = None
    for i, b in enumerate(S.blocks):
        if isinstance(b, HPolyhedron):
            if exact_input:
                y = _project_polyhedron_exact(b, as_vector(z))
                y = None if y is None else np.array([float(v) for v in y])
            else:
                y = _project_polyhedron_float(b, z)
        else:
            y = _project_smooth(b, [float(v) for v in z])
        if y is None:
            log.warning("block %d is empty; skipped", i)
            continue
        dist = float(np.linalg.norm(np.asarray([float(v) for v in z]) - y))
        if best is None or dist < best[1]:
            best = (y, dist, i)
    if best is None:
        raise ValueError("every block of the union is empty")
    return best


def project_exact(S: PolyUnion, z):
    """Exact projection for polyhedral unions: (point, squared distance, block)."""
    z = as_vector(z)
    if len(z) != S.dim:
        raise ValueError("dimension mismatch")
    if not S.is_polyhedral:
        raise ValueError("exact projection needs polyhedral blocks")
    best = None
    for i, b in enumerate(S.blocks):
        y = _project_polyhedron_exact(b, z)
        if y is None:
            log.warning("block %d is empty; skipped", i)
            continue
        d2 = sum(((a - c) ** 2 for a, c in zip(z, y)), Fraction(0))
        if best is None or d2 < best[1]:
            best = (y, d2, i)
    if best is None:
        raise ValueError("every block of the union is empty")
    return best


def dist_sq_float(S: PolyUnion, z) -> float:
    return project(S, z)[1] ** 2
