"""Exact multivariate polynomials over the rationals.

Grammar accepted by :func:`parse_polynomial` (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("+" | "-") unary | power ;
    power   = atom [ "^" integer ] ;
    atom    = number | name | "(" expr ")" ;
    number  = digit { digit } [ "." digit { digit } ] ;
    name    = letter { letter | digit | "_" } ;

Division is only allowed by a nonzero constant, so ``3/2*x1`` is fine while
``1/x1`` is rejected.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def as_fraction(value) -> Fraction:
    """Exact conversion; strings may use ``p/q`` or decimal notation."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot convert {value!r} to a rational")


def as_vector(values) -> tuple[Fraction, ...]:
    return tuple(as_fraction(v) for v in values)


class Polynomial:
    """Immutable polynomial with rational coefficients.

    ``terms`` maps exponent tuples to nonzero coefficients.
    """

    __slots__ = ("variables", "terms", "_hash")

    def __init__(self, variables: Sequence[str], terms: Mapping[tuple, Fraction] | None = None):
        self.variables = tuple(variables)
        n = len(self.variables)
        clean = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise ValueError(f"exponent {exps} does not match {n} variables")
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            coeff = as_fraction(coeff)
            if coeff:
                clean[exps] = clean.get(exps, Fraction(0)) + coeff
                if not clean[exps]:
                    del clean[exps]
        self.terms = dict(sorted(clean.items(), key=_term_order))
        self._hash = None

    # construction helpers
    @classmethod
    def constant(cls, variables, value) -> Polynomial:
        n = len(tuple(variables))
        return cls(variables, {(0,) * n: as_fraction(value)})

    @classmethod
    def variable(cls, variables, index: int) -> Polynomial:
        variables = tuple(variables)
        exps = [0] * len(variables)
        exps[index] = 1
        return cls(variables, {tuple(exps): Fraction(1)})

    @classmethod
    def linear(cls, variables, coeffs, const=0) -> Polynomial:
        variables = tuple(variables)
        n = len(variables)
        terms = {(0,) * n: as_fraction(const)}
        for i, c in enumerate(coeffs):
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = as_fraction(c)
        return cls(variables, terms)

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def _check(self, other: Polynomial):
        if self.variables != other.variables:
            raise ValueError(f"variable mismatch: {self.variables} vs {other.variables}")

    def _lift(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.constant(self.variables, other)

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, Fraction(0)) + c
        return Polynomial(self.variables, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.variables, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("power must be a non-negative integer")
        result = Polynomial.constant(self.variables, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.variables, tuple(self.terms.items())))
        return self._hash

    def __call__(self, point):
        return self.eval(point)

    def eval(self, point) -> Fraction:
        """Exact value; nested Horner accumulation over the first variable."""
        if len(point) != self.nvars:
            raise ValueError(f"point has {len(point)} coordinates, polynomial has {self.nvars} variables")
        point = as_vector(point)
        return _horner(list(self.terms.items()), point, 0)

    def eval_float(self, point) -> float:
        if len(point) != self.nvars:
            raise ValueError("arity mismatch")
        total = 0.0
        for e, c in self.terms.items():
            v = float(c)
            for xi, k in zip(point, e):
                if k:
                    v *= xi ** k
            total += v
        return total

    def differentiate(self, var_index: int) -> Polynomial:
        if not 0 <= var_index < self.nvars:
            raise IndexError(f"variable index {var_index} out of range")
        terms = {}
        for e, c in self.terms.items():
            k = e[var_index]
            if k:
                e2 = list(e)
                e2[var_index] = k - 1
                terms[tuple(e2)] = c * k
        return Polynomial(self.variables, terms)

    def gradient(self) -> tuple[Polynomial, ...]:
        return tuple(self.differentiate(i) for i in range(self.nvars))

    def shift(self, center) -> Polynomial:
        """p(center + s) as a polynomial in s (same variable names)."""
        center = as_vector(center)
        out = Polynomial(self.variables)
        subs = [Polynomial.variable(self.variables, i) + c for i, c in enumerate(center)]
        for e, c in self.terms.items():
            term = Polynomial.constant(self.variables, c)
            for i, k in enumerate(e):
                if k:
                    term = term * subs[i] ** k
            out = out + term
        return out

    def homogeneous_part(self, degree: int) -> Polynomial:
        return Polynomial(self.variables, {e: c for e, c in self.terms.items() if sum(e) == degree})

    def lowest_degree(self) -> int | None:
        return min((sum(e) for e in self.terms), default=None)

    def __str__(self):
        return format_polynomial(self)

    def __repr__(self):
        return f"Polynomial({format_polynomial(self)!r}, {list(self.variables)!r})"


def _term_order(item):
    exps, _ = item
    # graded, then lexicographic on exponents, highest first
    return (-sum(exps), tuple(-e for e in exps))


def _horner(items, point, var):
    if var == len(point):
        return sum((c for _, c in items), Fraction(0))
    groups: dict[int, list] = {}
    for e, c in items:
        groups.setdefault(e[var], []).append((e, c))
    x = point[var]
    acc = Fraction(0)
    top = max(groups, default=0)
    for k in range(top, -1, -1):
        acc = acc * x
        if k in groups:
            acc += _horner(groups[k], point, var + 1)
    return acc


def _format_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_polynomial(p: Polynomial) -> str:
    if not p.terms:
        return "0"
    pieces = []
    for exps, coeff in p.terms.items():
        factors = []
        for name, k in zip(p.variables, exps):
            if k == 1:
                factors.append(name)
            elif k > 1:
                factors.append(f"{name}^{k}")
        mag = abs(coeff)
        if not factors:
            body = _format_coeff(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([_format_coeff(mag)] + factors)
        sign = "-" if coeff < 0 else "+"
        pieces.append((sign, body))
    first_sign, first_body = pieces[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


# ---------------------------------------------------------------- parsing

def _tokenize(text: str):
    data = text.encode("utf-8")
    i = 0
    tokens = []
    while i < len(data):
        ch = chr(data[i])
        if ch.isspace():
            i += 1
        elif ch.isdigit() or (ch == "." and i + 1 < len(data) and chr(data[i + 1]).isdigit()):
            j = i
            while j < len(data) and (chr(data[j]).isdigit() or chr(data[j]) == "."):
                j += 1
            lit = data[i:j].decode()
            if lit.count(".") > 1:
                raise ParseError(f"malformed number {lit!r}", i)
            tokens.append(("num", Fraction(lit), i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(data) and (chr(data[j]).isalnum() or chr(data[j]) == "_"):
                j += 1
            tokens.append(("name", data[i:j].decode(), i))
            i = j
        elif ch in "+-*/^()":
            tokens.append((ch, ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", None, len(data)))
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variables = tuple(variables)
        self.index = {v: i for i, v in enumerate(self.variables)}

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1] if tok[1] is not None else 'end of input'!r}", tok[2])
        self.pos += 1
        return tok

    def parse(self) -> Polynomial:
        p = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return p

    def expr(self):
        p = self.term()
        while self.peek()[0] in "+-" and self.peek()[0] != "end":
            op = self.take()[0]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek()[0] in ("*", "/"):
            op, _, off = self.take()
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant() or q.is_zero():
                    raise ParseError("division only by a nonzero constant", off)
                p = p * (1 / q.terms[(0,) * len(self.variables)])
        return p

    def unary(self):
        kind = self.peek()[0]
        if kind == "-":
            self.take()
            return -self.unary()
        if kind == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            kind, value, off = self.take()
            if kind != "num" or value.denominator != 1:
                raise ParseError("exponent must be a non-negative integer", off)
            return base ** int(value)
        return base

    def atom(self):
        kind, value, off = self.take()
        if kind == "num":
            return Polynomial.constant(self.variables, value)
        if kind == "name":
            if value not in self.index:
                raise ParseError(f"unknown variable {value!r}", off)
            return Polynomial.variable(self.variables, self.index[value])
        if kind == "(":
            p = self.expr()
            self.take(")")
            return p
        raise ParseError(f"unexpected token {value if value is not None else 'end of input'!r}", off)


def parse_polynomial(text: str, variables: Sequence[str]) -> Polynomial:
    return _Parser(text, variables).parse()


class PolyMap:
    """A polynomial map R^n -> R^m given by its components."""

    __slots__ = ("variables", "components", "_jac")

    def __init__(self, components: Iterable[Polynomial], variables: Sequence[str] | None = None):
        comps = tuple(components)
        if variables is None:
            if not comps:
                raise ValueError("variables required for an empty map")
            variables = comps[0].variables
        self.variables = tuple(variables)
        for c in comps:
            if c.variables != self.variables:
                raise ValueError("all components must share the same variables")
        self.components = comps
        self._jac = None

    @classmethod
    def parse(cls, texts: Sequence[str], variables: Sequence[str]) -> PolyMap:
        return cls([parse_polynomial(t, variables) for t in texts], variables)

    @property
    def domain_dim(self) -> int:
        return len(self.variables)

    @property
    def codomain_dim(self) -> int:
        return len(self.components)

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x) -> tuple[Fraction, ...]:
        return tuple(c.eval(x) for c in self.components)

    def eval_float(self, x):
        return [c.eval_float(x) for c in self.components]

    def is_affine(self) -> bool:
        return all(c.degree <= 1 for c in self.components)

    def jacobian_polys(self) -> tuple[tuple[Polynomial, ...], ...]:
        if self._jac is None:
            self._jac = tuple(c.gradient() for c in self.components)
        return self._jac

    def jacobian(self, x) -> list[list[Fraction]]:
        if len(x) != self.domain_dim:
            raise ValueError(f"point has {len(x)} coordinates, map expects {self.domain_dim}")
        x = as_vector(x)
        return [[d.eval(x) for d in row] for row in self.jacobian_polys()]

    def jacobian_float(self, x):
        return [[d.eval_float(x) for d in row] for row in self.jacobian_polys()]

    def transpose_apply(self, x, lam) -> tuple[Polynomial, ...] | list:
        """G'(x)^T lam, exact."""
        J = self.jacobian(x)
        lam = as_vector(lam)
        n = self.domain_dim
        return [sum((J[i][j] * lam[i] for i in range(len(lam))), Fraction(0)) for j in range(n)]

    def transpose_apply_poly(self, lam) -> tuple[Polynomial, ...]:
        """x -> G'(x)^T lam as a vector of polynomials."""
        lam = as_vector(lam)
        rows = self.jacobian_polys()
        out = []
        for j in range(self.domain_dim):
            acc = Polynomial(self.variables)
            for i, li in enumerate(lam):
                if li:
                    acc = acc + rows[i][j] * li
            out.append(acc)
        return tuple(out)

    def __repr__(self):
        return f"PolyMap({[str(c) for c in self.components]!r}, {list(self.variables)!r})"


def jacobian(G: PolyMap, x) -> list[list[Fraction]]:
    return G.jacobian(x)


def differentiate(p: Polynomial, var_index: int) -> Polynomial:
    return p.differentiate(var_index)
