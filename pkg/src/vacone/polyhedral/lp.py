"""Exact two-phase simplex over the rationals.

Bland's rule is used for both entering and leaving variables, so degenerate
inputs (which are the norm for cone computations) cannot cycle.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Infeasible:
    status = "infeasible"


@dataclass(frozen=True)
class Optimal:
    point: tuple
    value: Fraction
    status = "optimal"


@dataclass(frozen=True)
class Unbounded:
    point: tuple
    ray: tuple
    status = "unbounded"


class _Tableau:
    def __init__(self, rows, rhs, basis, ncols):
        self.T = rows
        self.b = rhs
        self.basis = basis
        self.n = ncols

    def pivot(self, r, c):
        T, b = self.T, self.b
        piv = T[r][c]
        row = [v / piv for v in T[r]]
        T[r] = row
        b[r] = b[r] / piv
        for i in range(len(T)):
            if i != r:
                f = T[i][c]
                if f:
                    Ti = T[i]
                    for j in range(self.n):
                        if row[j]:
                            Ti[j] -= f * row[j]
                    b[i] -= f * b[r]
        self.basis[r] = c

    def reduced_costs(self, cost):
        red = list(cost)
        for i, bi in enumerate(self.basis):
            cb = cost[bi]
            if cb:
                Ti = self.T[i]
                for j in range(self.n):
                    if Ti[j]:
                        red[j] -= cb * Ti[j]
        return red

    def maximize(self, cost, allowed):
        """Bland-rule primal simplex; returns None on optimum or the unbounded column."""
        while True:
            red = self.reduced_costs(cost)
            enter = None
            for j in range(self.n):
                if allowed[j] and red[j] > 0 and j not in self.basis:
                    enter = j
                    break
            if enter is None:
                return None
            leave = None
            best = None
            for i in range(len(self.T)):
                a = self.T[i][enter]
                if a > 0:
                    ratio = self.b[i] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                return enter
            self.pivot(leave, enter)


def solve_lp(c, A_ub=(), b_ub=(), A_eq=(), b_eq=(), nonneg=None, nvars=None):
    """Maximize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x == b_eq``.

    ``nonneg[i]`` marks variables constrained to be >= 0; others are free.
    ``c`` may be None for a pure feasibility problem.
    """
    if nvars is None:
        if c is not None:
            nvars = len(c)
        elif A_ub:
            nvars = len(A_ub[0])
        elif A_eq:
            nvars = len(A_eq[0])
        else:
            raise ValueError("cannot infer the number of variables")
    if nonneg is None:
        nonneg = [False] * nvars
    cost_x = [Fraction(v) for v in c] if c is not None else [ZERO] * nvars
    for row in list(A_ub) + list(A_eq):
        if len(row) != nvars:
            raise ValueError("constraint row length does not match the variable count")
    if len(A_ub) != len(b_ub) or len(A_eq) != len(b_eq):
        raise ValueError("right-hand side length mismatch")

    # column layout: for each x_i either [u_i] or [u_i, w_i]; then slacks; then artificials
    colmap = []
    ncol = 0
    for i in range(nvars):
        if nonneg[i]:
            colmap.append((ncol, None))
            ncol += 1
        else:
            colmap.append((ncol, ncol + 1))
            ncol += 2
    nx = ncol
    m_ub, m_eq = len(A_ub), len(A_eq)
    nslack = m_ub
    ncol += nslack
    m = m_ub + m_eq

    rows, rhs = [], []
    for k in range(m):
        if k < m_ub:
            src, bk = A_ub[k], Fraction(b_ub[k])
        else:
            src, bk = A_eq[k - m_ub], Fraction(b_eq[k - m_ub])
        row = [ZERO] * ncol
        for i, (u, w) in enumerate(colmap):
            a = Fraction(src[i])
            if a:
                row[u] = a
                if w is not None:
                    row[w] = -a
        if k < m_ub:
            row[nx + k] = ONE
        rows.append(row)
        rhs.append(bk)

    basis = [None] * m
    for k in range(m):
        if rhs[k] < 0:
            rows[k] = [-v for v in rows[k]]
            rhs[k] = -rhs[k]
        if k < m_ub and rows[k][nx + k] == ONE:
            basis[k] = nx + k
    art_rows = [k for k in range(m) if basis[k] is None]
    nart = len(art_rows)
    total = ncol + nart
    for k in range(m):
        rows[k].extend([ZERO] * nart)
    for a, k in enumerate(art_rows):
        rows[k][ncol + a] = ONE
        basis[k] = ncol + a

    tab = _Tableau(rows, rhs, basis, total)
    if nart:
        cost1 = [ZERO] * ncol + [-ONE] * nart
        tab.maximize(cost1, [True] * total)
        if sum(tab.b[i] for i in range(m) if tab.basis[i] >= ncol) != 0:
            return Infeasible()
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for i in range(len(tab.T)):
            if tab.basis[i] >= ncol:
                col = next((j for j in range(ncol) if tab.T[i][j] != 0), None)
                if col is None:
                    continue
                tab.pivot(i, col)
            keep.append(i)
        tab.T = [tab.T[i][:ncol] for i in keep]
        tab.b = [tab.b[i] for i in keep]
        tab.basis = [tab.basis[i] for i in keep]
        tab.n = ncol

    cost = [ZERO] * ncol
    for i, (u, w) in enumerate(colmap):
        cost[u] = cost_x[i]
        if w is not None:
            cost[w] = -cost_x[i]
    unbounded_col = tab.maximize(cost, [True] * ncol)

    values = [ZERO] * ncol
    for i, bi in enumerate(tab.basis):
        values[bi] = tab.b[i]
    point = tuple(values[u] - (values[w] if w is not None else ZERO) for u, w in colmap)
    if unbounded_col is not None:
        d = [ZERO] * ncol
        d[unbounded_col] = ONE
        for i, bi in enumerate(tab.basis):
            d[bi] = -tab.T[i][unbounded_col]
        ray = tuple(d[u] - (d[w] if w is not None else ZERO) for u, w in colmap)
        return Unbounded(point, ray)
    value = sum((cost_x[i] * point[i] for i in range(nvars)), ZERO)
    return Optimal(point, value)


def feasible_point(A_ub=(), b_ub=(), A_eq=(), b_eq=(), nonneg=None, nvars=None):
    """A feasible point or None."""
    res = solve_lp(None, A_ub, b_ub, A_eq, b_eq, nonneg=nonneg, nvars=nvars)
    return res.point if isinstance(res, Optimal) else None


def dot(u: Sequence, v: Sequence):
    return sum((a * b for a, b in zip(u, v)), ZERO)


def lp_feasible(constraints, objective=None):
    """Maximize ``objective`` over an HPolyhedron (None: feasibility only).

    The returned point, and the ray of an unbounded result, satisfy the
    constraints exactly on re-substitution.
    """
    if objective is not None and len(objective) != constraints.dim:
        raise ValueError("objective dimension does not match the polyhedron")
    A_ub = [a for a, e in zip(constraints.A, constraints.eq_mask) if not e]
    b_ub = [bi for bi, e in zip(constraints.b, constraints.eq_mask) if not e]
    A_eq = [a for a, e in zip(constraints.A, constraints.eq_mask) if e]
    b_eq = [bi for bi, e in zip(constraints.b, constraints.eq_mask) if e]
    return solve_lp(objective, A_ub, b_ub, A_eq, b_eq, nvars=constraints.dim)
