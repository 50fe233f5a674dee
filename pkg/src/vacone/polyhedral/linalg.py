"""Small exact linear-algebra helpers on lists of Fractions."""
from __future__ import annotations

from fractions import Fraction
from math import gcd

ZERO = Fraction(0)


def rref(rows, ncols=None):
    """Reduced row echelon form; returns (rows, pivot columns)."""
    M = [[Fraction(v) for v in r] for r in rows]
    if ncols is None:
        ncols = len(M[0]) if M else 0
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        pv = M[r][c]
        M[r] = [v / pv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M[:r], pivots


def rank(rows, ncols=None) -> int:
    if not rows:
        return 0
    return len(rref(rows, ncols)[1])


def nullspace(rows, ncols):
    """Basis of {x : rows @ x = 0}."""
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    R, piv = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = Fraction(1)
        for i, pc in enumerate(piv):
            v[pc] = -R[i][f]
        basis.append(v)
    return basis


def solve_square(A, b):
    """Solve A x = b exactly for nonsingular square A; None if singular."""
    n = len(A)
    M = [[Fraction(v) for v in A[i]] + [Fraction(b[i])] for i in range(n)]
    for c in range(n):
        p = next((i for i in range(c, n) if M[i][c] != 0), None)
        if p is None:
            return None
        M[c], M[p] = M[p], M[c]
        pv = M[c][c]
        M[c] = [v / pv for v in M[c]]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * bb for a, bb in zip(M[i], M[c])]
    return [M[i][n] for i in range(n)]


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), ZERO)


def matvec(A, x):
    return [dot(row, x) for row in A]


def transpose(A, ncols=None):
    if not A:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*A)]


def primitive(v):
    """Scale a rational vector to coprime integers, sign preserved."""
    v = [Fraction(a) for a in v]
    if not any(v):
        return tuple(Fraction(0) for _ in v)
    den = 1
    for a in v:
        den = den * a.denominator // gcd(den, a.denominator)
    ints = [int(a * den) for a in v]
    g = 0
    for a in ints:
        g = gcd(g, abs(a))
    return tuple(Fraction(a // g) for a in ints)


def normalize_leading(v):
    """Scale so the first nonzero entry has absolute value one (sign kept)."""
    for a in v:
        if a != 0:
            s = abs(a)
            return tuple(Fraction(b) / s for b in v)
    return tuple(Fraction(b) for b in v)


def inf_normalize(v):
    m = max((abs(a) for a in v), default=ZERO)
    if m == 0:
        return tuple(v)
    return tuple(Fraction(a) / m for a in v)


def orth_project_out(v, basis_rref):
    """Component of v in the complement spanned by non-basis directions.

    ``basis_rref`` is the RREF of a subspace basis with its pivots; the result
    has zeros on pivot coordinates, which is a canonical representative of
    v modulo the subspace.
    """
    rows, piv = basis_rref
    v = list(v)
    for row, pc in zip(rows, piv):
        f = v[pc]
        if f:
            v = [a - f * b for a, b in zip(v, row)]
    return v
