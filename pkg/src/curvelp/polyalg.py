"""Exact multivariate polynomials and rational functions over Q.

Coefficients are :class:`fractions.Fraction` throughout; nothing in this
module ever touches floating point except :meth:`MultiPoly.evaluate_float`,
which exists only for cross-checking.

The textual grammar accepted by :func:`parse_poly` / :func:`parse_rational`
is documented in ``docs/grammar.md``::

    expr    = [ "+" | "-" ] term { ( "+" | "-" ) term } ;
    term    = factor { ( "*" | "/" ) factor } ;
    factor  = ( "+" | "-" ) factor | power ;
    power   = atom [ "^" INTEGER ] ;
    atom    = NUMBER | NAME | "(" expr ")" ;
    NUMBER  = DIGITS [ "." DIGITS ] ;
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "MultiPoly",
    "RationalFn",
    "ParseError",
    "parse_poly",
    "parse_rational",
    "partial_derivative",
    "det",
    "det_cofactor",
    "as_fraction",
]


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def _lex_key(exp: tuple[int, ...]) -> tuple:
    # graded lex, descending when used with reverse=True
    return (sum(exp), exp)


class MultiPoly:
    """A polynomial in ``nvars`` variables with Fraction coefficients.

    Terms are stored as ``{exponent_tuple: coefficient}`` with no zero
    coefficients, so two equal polynomials always compare and hash equal.
    Instances are treated as immutable.
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], object] | None = None):
        self.nvars = int(nvars)
        clean: dict[tuple[int, ...], Fraction] = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != self.nvars:
                    raise ValueError(f"exponent {exp} has wrong length for {self.nvars} variables")
                if any(e < 0 for e in exp):
                    raise ValueError(f"negative exponent in {exp}")
                c = as_fraction(c)
                if c:
                    clean[exp] = clean.get(exp, Fraction(0)) + c
                    if not clean[exp]:
                        del clean[exp]
        self.terms = clean
        self._hash = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, c) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, index: int) -> "MultiPoly":
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[index] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "MultiPoly":
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj.terms = terms
        obj._hash = None
        return obj

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self.terms), default=-1)

    def variables_used(self) -> set[int]:
        return {i for e in self.terms for i, k in enumerate(e) if k}

    def leading_term(self) -> tuple[tuple[int, ...], Fraction]:
        """Leading term under pure lex order (x0 > x1 > ...)."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        exp = max(self.terms)
        return exp, self.terms[exp]

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Terms in the canonical printing order (graded lex, descending)."""
        return sorted(self.terms.items(), key=lambda kv: _lex_key(kv[0]), reverse=True)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return MultiPoly.const(self.nvars, other)
        raise TypeError(f"cannot combine MultiPoly with {type(other).__name__}")

    def __add__(self, other):
        if isinstance(other, RationalFn):
            return NotImplemented
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v = v + c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return MultiPoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, RationalFn):
            return NotImplemented
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, RationalFn):
            return NotImplemented
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            other = as_fraction(other)
            if not other:
                return MultiPoly.zero(self.nvars)
            return MultiPoly._raw(self.nvars, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e, 0) + c1 * c2
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        return MultiPoly._raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial exponent must be a nonnegative integer")
        result = MultiPoly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            other = as_fraction(other)
            if not other:
                raise ZeroDivisionError("division of polynomial by zero")
            return self * (1 / other)
        return RationalFn(self, self._coerce(other))

    def diff(self, index: int) -> "MultiPoly":
        if not 0 <= index < self.nvars:
            raise IndexError(f"variable index {index} out of range for {self.nvars} variables")
        out = {}
        for e, c in self.terms.items():
            k = e[index]
            if k:
                ne = list(e)
                ne[index] = k - 1
                out[tuple(ne)] = c * k
        return MultiPoly._raw(self.nvars, out)

    def exact_div(self, other: "MultiPoly") -> "MultiPoly":
        """Quotient ``self / other``; raises ``ArithmeticError`` if inexact."""
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if other.is_constant():
            return self * (1 / other.constant_value())
        lt_e, lt_c = other.leading_term()
        rem = self
        quot: dict[tuple[int, ...], Fraction] = {}
        while rem.terms:
            e, c = rem.leading_term()
            if any(a < b for a, b in zip(e, lt_e)):
                raise ArithmeticError("polynomial division is not exact")
            qe = tuple(a - b for a, b in zip(e, lt_e))
            qc = c / lt_c
            quot[qe] = qc
            rem = rem - MultiPoly._raw(self.nvars, {qe: qc}) * other
        return MultiPoly._raw(self.nvars, quot)

    # -- evaluation -------------------------------------------------------
    def evaluate(self, point: Sequence) -> Fraction:
        if len(point) != self.nvars:
            raise ValueError(f"point has {len(point)} coordinates, expected {self.nvars}")
        pt = [as_fraction(p) for p in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for x, k in zip(pt, e):
                if k:
                    v *= x ** k
            total += v
        return total

    def evaluate_float(self, point: Sequence[float]) -> float:
        total = 0.0
        for e, c in self.terms.items():
            v = float(c)
            for x, k in zip(point, e):
                if k:
                    v *= x ** k
            total += v
        return total

    def substitute(self, values: Mapping[int, object]) -> "MultiPoly":
        """Substitute exact values for some variables (variable count kept)."""
        vals = {i: as_fraction(v) for i, v in values.items()}
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self.terms.items():
            ne = list(e)
            for i, v in vals.items():
                if ne[i]:
                    c = c * v ** ne[i]
                    ne[i] = 0
            if c:
                key = tuple(ne)
                s = out.get(key, 0) + c
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return MultiPoly._raw(self.nvars, out)

    def compose(self, images: Sequence["MultiPoly"]) -> "MultiPoly":
        """Substitute polynomial ``images[i]`` for variable ``i``."""
        if len(images) != self.nvars:
            raise ValueError("need one image polynomial per variable")
        target = images[0].nvars if images else 0
        result = MultiPoly.zero(target)
        for e, c in self.terms.items():
            term = MultiPoly.const(target, c)
            for img, k in zip(images, e):
                if k:
                    term = term * img ** k
            result = result + term
        return result

    def embed(self, nvars: int, mapping: Sequence[int]) -> "MultiPoly":
        """Re-index into a ring of ``nvars`` variables; variable i -> mapping[i]."""
        out = {}
        for e, c in self.terms.items():
            ne = [0] * nvars
            for i, k in enumerate(e):
                if k:
                    ne[mapping[i]] += k
            out[tuple(ne)] = c
        return MultiPoly(nvars, out)

    # -- printing ---------------------------------------------------------
    def to_str(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts: list[str] = []
        for i, (e, c) in enumerate(self.sorted_terms()):
            mono = "*".join(
                names[j] if k == 1 else f"{names[j]}^{k}" for j, k in enumerate(e) if k
            )
            mag = abs(c)
            if mono:
                body = mono if mag == 1 else f"{_frac_str(mag)}*{mono}"
            else:
                body = _frac_str(mag)
            if i == 0:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append((" - " if c < 0 else " + ") + body)
        return "".join(parts)

    def __repr__(self) -> str:
        return f"MultiPoly({self.nvars}, {self.to_str()!r})"


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# ---------------------------------------------------------------------------
# gcd

def _poly_gcd(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    """Monic (lex) gcd of two polynomials over Q."""
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    if a.is_constant() or b.is_constant():
        return MultiPoly.const(a.nvars, 1)
    used = sorted(a.variables_used() | b.variables_used())
    if len(used) == 1:
        g = _univariate_gcd(a, b, used[0])
    else:
        g = _sympy_gcd(a, b)
    _, lc = g.leading_term()
    return g * (1 / lc)


def _univariate_gcd(a: MultiPoly, b: MultiPoly, idx: int) -> MultiPoly:
    def to_list(p):
        d = p.degree_in(idx)
        coeffs = [Fraction(0)] * (d + 1)
        for e, c in p.terms.items():
            coeffs[e[idx]] = c
        return coeffs

    x, y = to_list(a), to_list(b)
    while any(y):
        _, r = _udivmod(x, y)
        x, y = y, r
    out = {}
    for k, c in enumerate(x):
        if c:
            e = [0] * a.nvars
            e[idx] = k
            out[tuple(e)] = c
    return MultiPoly(a.nvars, out)


def _utrim(p: list) -> list:
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return p


def _udivmod(a: list, b: list) -> tuple[list, list]:
    """Divide coefficient lists (index = power). Returns (quotient, remainder)."""
    a, b = _utrim(a), _utrim(b)
    if not b:
        raise ZeroDivisionError("division by zero polynomial")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    r = list(a)
    lb = b[-1]
    while len(r) >= len(b) and r:
        shift = len(r) - len(b)
        f = r[-1] / lb
        q[shift] = f
        for i, c in enumerate(b):
            r[i + shift] -= f * c
        r = _utrim(r)
    return q, r


def _sympy_gcd(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    from sympy import QQ
    from sympy.polys.rings import ring

    n = a.nvars
    R, *_ = ring([f"v{i}" for i in range(n)], QQ)

    def to_ring(p):
        return R.from_dict({e: QQ(c.numerator, c.denominator) for e, c in p.terms.items()})

    g = to_ring(a).gcd(to_ring(b))
    return MultiPoly(n, {tuple(e): Fraction(int(c.numerator), int(c.denominator)) for e, c in g.to_dict().items()})


# ---------------------------------------------------------------------------
# rational functions

class RationalFn:
    """A quotient of two MultiPolys in lowest terms with a monic denominator.

    Normal form: ``gcd(num, den) = 1`` and the lex-leading coefficient of
    ``den`` equals 1, so equal rational functions have equal fields.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: MultiPoly, den: MultiPoly | None = None, *, _normalized: bool = False):
        if den is None:
            den = MultiPoly.const(num.nvars, 1)
        if num.nvars != den.nvars:
            raise ValueError("numerator and denominator live in different rings")
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        self._hash = None
        if _normalized:
            self.num, self.den = num, den
            return
        if num.is_zero():
            self.num, self.den = num, MultiPoly.const(num.nvars, 1)
            return
        if den.is_constant():
            self.num = num * (1 / den.constant_value())
            self.den = MultiPoly.const(num.nvars, 1)
            return
        g = _poly_gcd(num, den)
        if not g.is_constant():
            num = num.exact_div(g)
            den = den.exact_div(g)
        _, lc = den.leading_term()
        self.num = num * (1 / lc)
        self.den = den * (1 / lc)
        if self.den.is_constant():
            self.den = MultiPoly.const(num.nvars, 1)

    @classmethod
    def from_poly(cls, p: MultiPoly) -> "RationalFn":
        return cls(p, MultiPoly.const(p.nvars, 1), _normalized=True)

    @classmethod
    def const(cls, nvars: int, c) -> "RationalFn":
        return cls.from_poly(MultiPoly.const(nvars, c))

    @classmethod
    def zero(cls, nvars: int) -> "RationalFn":
        return cls.from_poly(MultiPoly.zero(nvars))

    @property
    def nvars(self) -> int:
        return self.num.nvars

    def is_poly(self) -> bool:
        return self.den.is_constant()

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        return self.num.constant_value() / self.den.constant_value()

    def __bool__(self) -> bool:
        return not self.num.is_zero()

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalFn):
            return self.num == other.num and self.den == other.den
        if isinstance(other, MultiPoly):
            return self.is_poly() and self.num == other
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def _coerce(self, other) -> "RationalFn":
        if isinstance(other, RationalFn):
            return other
        if isinstance(other, MultiPoly):
            return RationalFn.from_poly(other)
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return RationalFn.const(self.nvars, other)
        raise TypeError(f"cannot combine RationalFn with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        if self.is_poly() and other.is_poly():
            return RationalFn.from_poly(self.num + other.num)
        if self.den == other.den:
            return RationalFn(self.num + other.num, self.den)
        return RationalFn(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, self.den, _normalized=True)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if self.is_poly() and other.is_poly():
            return RationalFn.from_poly(self.num * other.num)
        return RationalFn(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFn(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise ValueError("exponent must be an integer")
        if k < 0:
            return RationalFn.const(self.nvars, 1) / (self ** (-k))
        return RationalFn(self.num ** k, self.den ** k, _normalized=True)

    def diff(self, index: int) -> "RationalFn":
        if self.is_poly():
            return RationalFn.from_poly(self.num.diff(index))
        n, d = self.num, self.den
        return RationalFn(n.diff(index) * d - n * d.diff(index), d * d)

    def evaluate(self, point: Sequence) -> Fraction:
        dv = self.den.evaluate(point)
        if not dv:
            raise ZeroDivisionError("denominator vanishes at the evaluation point")
        return self.num.evaluate(point) / dv

    def evaluate_float(self, point: Sequence[float]) -> float:
        return self.num.evaluate_float(point) / self.den.evaluate_float(point)

    def substitute(self, values: Mapping[int, object]) -> "RationalFn":
        den = self.den.substitute(values)
        if den.is_zero():
            raise ZeroDivisionError("denominator vanishes after substitution")
        return RationalFn(self.num.substitute(values), den)

    def embed(self, nvars: int, mapping: Sequence[int]) -> "RationalFn":
        return RationalFn(self.num.embed(nvars, mapping), self.den.embed(nvars, mapping))

    def to_str(self, names: Sequence[str] | None = None) -> str:
        if self.is_poly():
            return self.num.to_str(names)
        return f"({self.num.to_str(names)})/({self.den.to_str(names)})"

    def __repr__(self) -> str:
        return f"RationalFn({self.to_str()!r})"


def partial_derivative(p, index: int):
    """Exact partial derivative of a MultiPoly or RationalFn."""
    if isinstance(p, (MultiPoly, RationalFn)):
        return p.diff(index)
    raise TypeError(f"cannot differentiate {type(p).__name__}")


# ---------------------------------------------------------------------------
# determinants

def _as_rfn(x, nvars: int) -> RationalFn:
    if isinstance(x, RationalFn):
        return x
    if isinstance(x, MultiPoly):
        return RationalFn.from_poly(x)
    return RationalFn.const(nvars, as_fraction(x))


def _bareiss(rows: list[list[MultiPoly]]) -> MultiPoly:
    n = len(rows)
    if n == 0:
        raise ValueError("empty matrix")
    nv = rows[0][0].nvars
    m = [list(r) for r in rows]
    sign = 1
    prev = MultiPoly.const(nv, 1)
    for k in range(n - 1):
        if m[k][k].is_zero():
            # pick the sparsest nonzero pivot below
            cands = [i for i in range(k + 1, n) if not m[i][k].is_zero()]
            if not cands:
                return MultiPoly.zero(nv)
            piv = min(cands, key=lambda i: len(m[i][k].terms))
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * m[k][k] - m[i][k] * m[k][j]
                m[i][j] = num.exact_div(prev) if not prev.is_constant() else num * (1 / prev.constant_value())
            m[i][k] = MultiPoly.zero(nv)
        prev = m[k][k]
    out = m[n - 1][n - 1]
    return out if sign > 0 else -out


def det(matrix: Sequence[Sequence]) -> RationalFn:
    """Exact determinant of a square matrix of RationalFn / MultiPoly / rationals.

    Rows are cleared of denominators and the resulting polynomial matrix is
    reduced by Bareiss fraction-free elimination.
    """
    n = len(matrix)
    if n == 0 or any(len(r) != n for r in matrix):
        raise ValueError("det requires a nonempty square matrix")
    nvars = next((x.nvars for r in matrix for x in r if isinstance(x, (MultiPoly, RationalFn))), 0)
    rm = [[_as_rfn(x, nvars) for x in r] for r in matrix]
    if any(x.nvars != nvars for r in rm for x in r):
        raise ValueError("matrix entries live in different rings")
    scale = MultiPoly.const(nvars, 1)
    rows = []
    for r in rm:
        common = MultiPoly.const(nvars, 1)
        for x in r:
            if not x.den.is_constant():
                g = _poly_gcd(common, x.den)
                common = common * x.den.exact_div(g)
        scale = scale * common
        rows.append([x.num * common.exact_div(x.den) if not x.den.is_constant() else x.num * common for x in r])
    return RationalFn(_bareiss(rows), scale)


def det_cofactor(matrix: Sequence[Sequence]):
    """Laplace expansion along the first row; works on any ring elements."""
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    if n == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    total = None
    for j in range(n):
        if isinstance(matrix[0][j], (int, Fraction)) and matrix[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = matrix[0][j] * det_cofactor(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total if total is not None else 0


# ---------------------------------------------------------------------------
# parsing

class ParseError(ValueError):
    """Raised on malformed expressions; carries the 0-based offset."""

    def __init__(self, message: str, position: int, text: str = "", expected: Iterable[str] = ()):
        self.position = position
        self.expected = tuple(expected)
        self.text = text
        detail = f"{message} at position {position}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        if text:
            detail += f"\n  {text}\n  {' ' * position}^"
        super().__init__(detail)


_TOKEN_RE = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][A-Za-z_0-9']*)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            break
        num, name, op = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            tokens.append(("num", num, start))
        elif name is not None:
            tokens.append(("name", name, start))
        elif op in "+-*/^()":
            tokens.append(("op", op, start))
        else:
            raise ParseError(f"unexpected character {op!r}", start, text,
                             ("number", "variable", "operator", "parenthesis"))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str], allow_poly_division: bool):
        self.text = text
        self.names = {v: i for i, v in enumerate(variables)}
        if len(self.names) != len(variables):
            raise ValueError("duplicate variable names")
        self.nvars = len(variables)
        self.allow_div = allow_poly_division
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok, expected=()):
        raise ParseError(msg, tok[2], self.text, expected)

    def parse(self) -> RationalFn:
        if self.peek()[0] == "end":
            self.error("empty expression", self.peek(), ("expression",))
        val = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.error(f"unexpected token {tok[1]!r}", tok, ("+", "-", "*", "/", "end of input"))
        return val

    def expr(self) -> RationalFn:
        val = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self) -> RationalFn:
        val = self.factor()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            optok = self.take()
            rhs = self.factor()
            if optok[1] == "*":
                val = val * rhs
            else:
                if rhs.is_zero():
                    self.error("division by zero", optok)
                if not rhs.is_constant() and not self.allow_div:
                    self.error("division by a non-constant expression", optok, ("numeric divisor",))
                val = val / rhs
        return val

    def factor(self) -> RationalFn:
        tok = self.peek()
        if tok[:2] == ("op", "-"):
            self.take()
            return -self.factor()
        if tok[:2] == ("op", "+"):
            self.take()
            return self.factor()
        return self.power()

    def power(self) -> RationalFn:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            tok = self.peek()
            if tok[:2] == ("op", "-"):
                self.error("negative exponent", tok, ("nonnegative integer",))
            if tok[0] != "num":
                self.error("exponent must be an integer literal", tok, ("nonnegative integer",))
            if "." in tok[1]:
                self.error("non-integer exponent", tok, ("nonnegative integer",))
            self.take()
            return base ** int(tok[1])
        return base

    def atom(self) -> RationalFn:
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return RationalFn.const(self.nvars, Fraction(val))
        if kind == "name":
            if val not in self.names:
                self.error(f"unknown variable {val!r}", tok, sorted(self.names))
            return RationalFn.from_poly(MultiPoly.var(self.nvars, self.names[val]))
        if tok[:2] == ("op", "("):
            inner = self.expr()
            close = self.peek()
            if close[:2] != ("op", ")"):
                self.error("unbalanced parenthesis", close, (")",))
            self.take()
            return inner
        self.error(f"unexpected {'end of input' if kind == 'end' else repr(val)}", tok,
                   ("number", "variable", "("))


def parse_poly(text: str, variables: Sequence[str]) -> MultiPoly:
    """Parse a polynomial expression over the given ordered variable names."""
    val = _Parser(text, variables, allow_poly_division=False).parse()
    return val.num


def parse_rational(text: str, variables: Sequence[str]) -> RationalFn:
    """Like :func:`parse_poly` but also accepts division by polynomials."""
    return _Parser(text, variables, allow_poly_division=True).parse()
