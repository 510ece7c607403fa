"""Vector fields with exact rational-function coefficients and their brackets.

Coordinates of the incidence manifold are fixed per operator kind:

* convolution: ``(x1, ..., x_{n-1}, t)``
* restricted x-ray: ``(x1, ..., x_{n-2}, t, s)``
* diffeomorphism family: ``(x1, ..., x_{n-1}, t)``

Symbolic parameters (e.g. ``a`` in the Heisenberg family) are carried as
extra trailing variables of the coefficient ring; they are never
differentiated and never integrated along.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .polyalg import (
    MultiPoly,
    RationalFn,
    as_fraction,
    det,
    det_cofactor,
    parse_rational,
)

__all__ = [
    "VectorField",
    "Word",
    "Degree",
    "WordTable",
    "OperatorSpec",
    "FieldData",
    "HormanderResult",
    "SpecError",
    "lie_bracket",
    "build_words",
    "evaluate_fields",
    "lambda_I",
    "spec_to_fields",
    "hormander_check",
    "is_field_zero",
    "nonvanishing_condition",
    "Echelon",
]


class SpecError(ValueError):
    """An operator description violates its structural requirements."""


def is_field_zero(x) -> bool:
    if isinstance(x, RationalFn):
        return x.is_zero()
    return x == 0


# ---------------------------------------------------------------------------
# vector fields

class VectorField:
    """``sum_i components[i] * d/d(names[i])`` on an n-dimensional chart.

    ``names`` lists every ring variable; the first ``dim`` are coordinates,
    the rest are symbolic parameters.
    """

    __slots__ = ("components", "names", "dim")

    def __init__(self, components: Sequence, names: Sequence[str], dim: int | None = None):
        names = tuple(names)
        dim = len(components) if dim is None else dim
        if len(components) != dim:
            raise ValueError(f"expected {dim} components, got {len(components)}")
        if dim > len(names):
            raise ValueError("more components than ring variables")
        comps = []
        for c in components:
            if isinstance(c, MultiPoly):
                c = RationalFn.from_poly(c)
            elif not isinstance(c, RationalFn):
                c = RationalFn.const(len(names), as_fraction(c))
            if c.nvars != len(names):
                raise ValueError("component ring does not match the variable names")
            comps.append(c)
        self.components = tuple(comps)
        self.names = names
        self.dim = dim

    @classmethod
    def from_strings(cls, exprs: Sequence[str], names: Sequence[str], dim: int | None = None):
        return cls([parse_rational(e, names) for e in exprs], names, dim)

    @classmethod
    def coordinate(cls, index: int, names: Sequence[str], dim: int) -> "VectorField":
        nv = len(names)
        return cls([RationalFn.const(nv, 1 if i == index else 0) for i in range(dim)], names, dim)

    @property
    def params(self) -> tuple[str, ...]:
        return self.names[self.dim:]

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def _check(self, other: "VectorField"):
        if self.dim != other.dim or self.names != other.names:
            raise ValueError(
                f"dimension/variable mismatch: {self.dim}{self.names} vs {other.dim}{other.names}"
            )

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField([a + b for a, b in zip(self.components, other.components)], self.names, self.dim)

    def __neg__(self) -> "VectorField":
        return VectorField([-a for a in self.components], self.names, self.dim)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-other)

    def scale(self, f) -> "VectorField":
        """Multiply by a scalar (rational or rational function)."""
        return VectorField([f * a for a in self.components], self.names, self.dim)

    def apply(self, f: RationalFn) -> RationalFn:
        """Directional derivative ``X f``."""
        total = RationalFn.zero(len(self.names))
        for i, c in enumerate(self.components):
            if not c.is_zero():
                d = f.diff(i)
                if not d.is_zero():
                    total = total + c * d
        return total

    def evaluate(self, point: Sequence) -> tuple:
        """Exact value at a coordinate point.

        Returns Fractions when the field has no surviving parameters, else
        RationalFns in the parameter variables.
        """
        if len(point) != self.dim:
            raise ValueError(f"point has {len(point)} coordinates, expected {self.dim}")
        pt = [as_fraction(p) for p in point]
        if len(self.names) == self.dim:
            return tuple(c.evaluate(pt) for c in self.components)
        subs = dict(enumerate(pt))
        out = []
        for c in self.components:
            v = c.substitute(subs)
            out.append(v.constant_value() if v.is_constant() else v)
        if all(isinstance(v, Fraction) for v in out):
            return tuple(out)
        return tuple(v if isinstance(v, RationalFn) else RationalFn.const(len(self.names), v) for v in out)

    def specialize(self, values: dict[str, object]) -> "VectorField":
        """Substitute numeric values for parameters and drop them from the ring."""
        idx = {name: i for i, name in enumerate(self.names)}
        subs = {}
        for k, v in values.items():
            if k not in idx or idx[k] < self.dim:
                raise KeyError(f"{k!r} is not a parameter of this field")
            subs[idx[k]] = as_fraction(v)
        keep = [i for i in range(len(self.names)) if i not in subs]
        new_names = tuple(self.names[i] for i in keep)
        remap = [0] * len(self.names)
        for j, i in enumerate(keep):
            remap[i] = j
        comps = []
        for c in self.components:
            c = c.substitute(subs)
            num = _drop_vars(c.num, keep)
            den = _drop_vars(c.den, keep)
            comps.append(RationalFn(num, den))
        return VectorField(comps, new_names, self.dim)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.names == other.names and self.dim == other.dim and self.components == other.components

    def __hash__(self):
        return hash((self.components, self.names, self.dim))

    def to_strs(self) -> list[str]:
        return [c.to_str(self.names) for c in self.components]

    def to_str(self) -> str:
        parts = []
        for c, name in zip(self.components, self.names):
            if c.is_zero():
                continue
            s = c.to_str(self.names)
            if not c.is_constant() and (" " in s or s.startswith("-")):
                s = f"({s})"
            parts.append(f"{s}*d_{name}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"VectorField({self.to_str()})"


def _drop_vars(p: MultiPoly, keep: Sequence[int]) -> MultiPoly:
    return MultiPoly(len(keep), {tuple(e[i] for i in keep): c for e, c in p.terms.items()})


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y]_i = sum_j X_j d_j Y_i - Y_j d_j X_i``."""
    X._check(Y)
    return VectorField([X.apply(yi) - Y.apply(xi) for xi, yi in zip(X.components, Y.components)], X.names, X.dim)


# ---------------------------------------------------------------------------
# words and degrees

@dataclass(frozen=True)
class Degree:
    d1: int
    d2: int

    def __add__(self, other: "Degree") -> "Degree":
        return Degree(self.d1 + other.d1, self.d2 + other.d2)

    def leq(self, other: "Degree") -> bool:
        """Componentwise partial order."""
        return self.d1 <= other.d1 and self.d2 <= other.d2

    @property
    def total(self) -> int:
        return self.d1 + self.d2

    def as_tuple(self) -> tuple[int, int]:
        return (self.d1, self.d2)

    def __str__(self) -> str:
        return f"({self.d1},{self.d2})"


@dataclass(frozen=True, order=True)
class Word:
    letters: tuple[int, ...]

    def __post_init__(self):
        if not self.letters or any(c not in (1, 2) for c in self.letters):
            raise ValueError(f"a word is a nonempty string over {{1,2}}, got {self.letters!r}")

    @classmethod
    def parse(cls, text: str | "Word") -> "Word":
        if isinstance(text, Word):
            return text
        text = str(text).strip()
        if not text or any(ch not in "12" for ch in text):
            raise ValueError(f"a word is a nonempty string over {{1,2}}, got {text!r}")
        return cls(tuple(int(ch) for ch in text))

    @property
    def degree(self) -> Degree:
        return Degree(self.letters.count(1), self.letters.count(2))

    def sort_key(self):
        return (len(self.letters), self.letters)

    def __str__(self) -> str:
        return "".join(map(str, self.letters))

    def __repr__(self) -> str:
        return f"Word({str(self)!r})"


def tuple_degree(words: Iterable[Word]) -> Degree:
    total = Degree(0, 0)
    for w in words:
        total = total + w.degree
    return total


@dataclass
class WordTable:
    """Left-normed commutators ``X_w`` for all words of total degree <= cap."""

    X1: VectorField
    X2: VectorField
    cap: int
    entries: dict[Word, VectorField] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.X1.dim

    def __getitem__(self, w) -> VectorField:
        w = Word.parse(w) if not isinstance(w, Word) else w
        try:
            return self.entries[w]
        except KeyError:
            raise KeyError(f"word {w} not in table (cap {self.cap})") from None

    def __contains__(self, w) -> bool:
        return (Word.parse(w) if not isinstance(w, Word) else w) in self.entries

    def words(self) -> list[Word]:
        return list(self.entries)

    def degree(self, w) -> Degree:
        return (Word.parse(w) if not isinstance(w, Word) else w).degree

    def nonzero_words(self) -> list[Word]:
        return [w for w, X in self.entries.items() if not X.is_zero()]


def build_words(X1: VectorField, X2: VectorField, cap: int = 8) -> WordTable:
    """Enumerate ``X_{wj} = [X_w, X_j]`` in (length, lexicographic) order."""
    if cap < 1:
        raise ValueError("word cap must be at least 1")
    X1._check(X2)
    base = {1: X1, 2: X2}
    table = WordTable(X1, X2, cap)
    level = [(Word((1,)), X1), (Word((2,)), X2)]
    zero = VectorField([RationalFn.zero(len(X1.names))] * X1.dim, X1.names, X1.dim)
    length = 1
    while level:
        for w, X in level:
            table.entries[w] = X
        if length >= cap:
            break
        nxt = []
        for w, X in level:
            for j in (1, 2):
                child = Word(w.letters + (j,))
                nxt.append((child, zero if X.is_zero() else lie_bracket(X, base[j])))
        level = nxt
        length += 1
    return table


# ---------------------------------------------------------------------------
# determinants of word tuples

def _fraction_det(rows: list[list[Fraction]]) -> Fraction:
    m = [list(r) for r in rows]
    n = len(m)
    result = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            result = -result
        pk = m[k][k]
        result *= pk
        for i in range(k + 1, n):
            f = m[i][k] / pk
            if f:
                for j in range(k, n):
                    m[i][j] -= f * m[k][j]
    return result


def evaluate_fields(table: WordTable, words: Sequence[Word], point: Sequence) -> list[tuple]:
    return [table[w].evaluate(point) for w in words]


def lambda_I(table: WordTable, I: Sequence, point: Sequence):
    """``det(X_{w_1}(point), ..., X_{w_n}(point))`` exactly.

    Returns a Fraction, or a RationalFn in the surviving parameters.
    """
    words = [Word.parse(w) if not isinstance(w, Word) else w for w in I]
    if len(words) != table.dim:
        raise ValueError(f"need {table.dim} words, got {len(words)}")
    vecs = evaluate_fields(table, words, point)
    if all(isinstance(v, Fraction) for vec in vecs for v in vec):
        return _fraction_det([list(v) for v in vecs])
    nv = len(table.X1.names)
    mat = [[v if isinstance(v, RationalFn) else RationalFn.const(nv, v) for v in vec] for vec in vecs]
    val = det(mat)
    return val.constant_value() if val.is_constant() else val


def primitive_part(p: MultiPoly) -> MultiPoly:
    """Scale to coprime integer coefficients with a positive leading term."""
    from math import gcd, lcm

    coeffs = list(p.terms.values())
    if not coeffs:
        return p
    den = lcm(*(c.denominator for c in coeffs))
    g = gcd(*(int(c * den) for c in coeffs))
    scale = Fraction(den, g)
    if p.sorted_terms()[0][1] < 0:
        scale = -scale
    return p * scale


def nonvanishing_condition(value, names: Sequence[str]) -> str | None:
    """Human-readable condition under which a parametric value is nonzero.

    Returns None when the value is a nonzero constant.
    """
    if isinstance(value, RationalFn):
        if value.is_constant():
            return None if value.constant_value() else "identically zero"
        return f"nonzero unless {primitive_part(value.num).to_str(names)} = 0"
    return None if value else "identically zero"


class Echelon:
    """Incremental row echelon form over Q or Q(params), for independence tests."""

    def __init__(self, n: int):
        self.n = n
        self.rows: list[tuple[int, list]] = []

    def copy(self) -> "Echelon":
        e = Echelon(self.n)
        e.rows = list(self.rows)
        return e

    def reduce(self, vec: Sequence) -> list:
        v = list(vec)
        for piv, row in self.rows:
            if not is_field_zero(v[piv]):
                f = v[piv] / row[piv]
                v = [a - f * b for a, b in zip(v, row)]
        return v

    def try_add(self, vec: Sequence) -> bool:
        v = self.reduce(vec)
        piv = next((i for i, a in enumerate(v) if not is_field_zero(a)), None)
        if piv is None:
            return False
        self.rows.append((piv, v))
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)


# ---------------------------------------------------------------------------
# Hormander spanning check

@dataclass
class HormanderResult:
    spans: bool
    witnesses: list  # list of (tuple[Word, ...], Degree, value)
    cap: int
    message: str = ""

    @property
    def witness(self):
        return self.witnesses[0] if self.witnesses else None


def candidate_order(table: WordTable, words: Iterable[Word]) -> list[Word]:
    return sorted(words, key=lambda w: (w.degree.total, w.sort_key()))


def hormander_check(table: WordTable, point: Sequence) -> HormanderResult:
    """Find a lowest-total-degree spanning tuple at ``point``.

    Greedy selection in order of total degree yields a minimum-weight basis
    (the independent sets of a vector family form a matroid).
    """
    n = table.dim
    ech = Echelon(n)
    chosen: list[Word] = []
    for w in candidate_order(table, table.nonzero_words()):
        vec = table[w].evaluate(point)
        if all(is_field_zero(a) for a in vec):
            continue
        if ech.try_add(vec):
            chosen.append(w)
            if ech.rank == n:
                break
    if ech.rank < n:
        return HormanderResult(
            False,
            [],
            table.cap,
            f"no spanning {n}-tuple among words of total degree <= {table.cap} "
            f"(rank {ech.rank} of {n}); without the Hormander condition no non-trivial "
            "restricted weak-type estimate holds",
        )
    I = tuple(chosen)
    val = lambda_I(table, I, point)
    return HormanderResult(True, [(I, tuple_degree(I), val)], table.cap, "spans")


# ---------------------------------------------------------------------------
# operator specifications

@dataclass
class OperatorSpec:
    """Description of an averaging operator by one of the supported recipes.

    kind is one of ``"raw"``, ``"convolution"``, ``"xray"``, ``"diffeo"``.
    """

    kind: str
    n: int
    X1: list[str] | None = None
    X2: list[str] | None = None
    curve: list[str] | None = None
    gamma: list[str] | None = None
    coords: list[str] | None = None
    params: list[str] = field(default_factory=list)
    param_values: dict[str, Fraction] = field(default_factory=dict)
    pi1: list[str] | None = None
    pi2: list[str] | None = None
    base_point: list[Fraction] | None = None
    name: str = ""

    def coordinate_names(self) -> list[str]:
        if self.coords:
            return list(self.coords)
        n = self.n
        if self.kind in ("convolution", "diffeo"):
            return [f"x{i}" for i in range(1, n)] + ["t"]
        if self.kind == "xray":
            return [f"x{i}" for i in range(1, n - 1)] + ["t", "s"]
        return [f"x{i}" for i in range(1, n + 1)]

    def point(self) -> list[Fraction]:
        if self.base_point is None:
            return [Fraction(0)] * self.n
        if len(self.base_point) != self.n:
            raise SpecError(f"base point needs {self.n} coordinates")
        return [as_fraction(v) for v in self.base_point]


@dataclass
class FieldData:
    X1: VectorField
    X2: VectorField
    pi1: list[RationalFn]
    pi2: list[RationalFn]
    n: int
    names: tuple[str, ...]
    point: list[Fraction]
    W: list[RationalFn] | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def coords(self) -> tuple[str, ...]:
        return self.names[: self.n]

    @property
    def params(self) -> tuple[str, ...]:
        return self.names[self.n:]


def _adjugate(m: list[list[RationalFn]]) -> list[list[RationalFn]]:
    k = len(m)
    nv = m[0][0].nvars
    if k == 1:
        return [[RationalFn.const(nv, 1)]]
    adj = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            minor = [row[:i] + row[i + 1:] for r, row in enumerate(m) if r != j]
            val = det_cofactor(minor)
            adj[i][j] = val if (i + j) % 2 == 0 else -val
    return adj


def spec_to_fields(spec: OperatorSpec) -> FieldData:
    """Realize an operator description as the pair (X1, X2) plus projections."""
    coords = spec.coordinate_names()
    n = spec.n
    if len(coords) != n:
        raise SpecError(f"expected {n} coordinate names, got {len(coords)}")
    if spec.kind in ("convolution", "diffeo", "xray") and n < (3 if spec.kind == "xray" else 2):
        raise SpecError(f"dimension {n} too small for {spec.kind}")
    params = [p for p in spec.params if p not in spec.param_values]
    names = tuple(coords) + tuple(params)
    nv = len(names)
    # parameters given values are substituted textually by parsing in an extended ring
    full_names = tuple(coords) + tuple(spec.params)
    subs_idx = {full_names.index(k): as_fraction(v) for k, v in spec.param_values.items()}
    if any(k not in spec.params for k in spec.param_values):
        raise SpecError("value given for an undeclared parameter")

    def rp(text: str) -> RationalFn:
        val = parse_rational(text, full_names)
        if subs_idx:
            val = val.substitute(subs_idx)
        keep = [i for i in range(len(full_names)) if i not in subs_idx]
        return RationalFn(_drop_vars(val.num, keep), _drop_vars(val.den, keep))

    one = RationalFn.const(nv, 1)
    zero = RationalFn.zero(nv)
    var = [RationalFn.from_poly(MultiPoly.var(nv, i)) for i in range(nv)]
    warnings: list[str] = []
    W = None

    if spec.kind == "raw":
        if not spec.X1 or not spec.X2:
            raise SpecError("raw spec needs X1 and X2")
        X1 = VectorField([rp(e) for e in spec.X1], names, n)
        X2 = VectorField([rp(e) for e in spec.X2], names, n)
        pi1 = [rp(e) for e in spec.pi1] if spec.pi1 else []
        pi2 = [rp(e) for e in spec.pi2] if spec.pi2 else []

    elif spec.kind == "convolution":
        if not spec.curve or len(spec.curve) != n - 1:
            raise SpecError(f"convolution needs a curve with {n - 1} components")
        t = n - 1
        gam = [rp(e) for e in spec.curve]
        for g in gam:
            if any(g.num.degree_in(i) > 0 or g.den.degree_in(i) > 0 for i in range(n - 1)):
                raise SpecError("convolution curve may depend on t only")
        zero_pt = {t: 0}
        if any(not g.substitute(zero_pt).is_zero() for g in gam):
            raise SpecError("convolution curve must satisfy gamma(0) = 0")
        dg = [g.diff(t) for g in gam]
        if all(d.substitute(zero_pt).is_zero() for d in dg):
            raise SpecError("convolution curve must satisfy gamma'(0) != 0")
        X1 = VectorField([zero] * (n - 1) + [one], names, n)
        X2 = VectorField([-d for d in dg] + [one], names, n)
        pi1 = [var[i] for i in range(n - 1)]
        pi2 = [var[i] + gam[i] for i in range(n - 1)]

    elif spec.kind == "xray":
        m = n - 2
        ti, si = n - 2, n - 1
        if spec.curve:
            if len(spec.curve) != m:
                raise SpecError(f"x-ray curve needs {m} components")
            gam = [rp(e) for e in spec.curve]
        else:
            gam = [var[si] ** (k + 1) for k in range(m)]
        dg = [g.diff(si) for g in gam]
        X1 = VectorField([-(var[ti] * d) for d in dg] + [zero, one], names, n)
        X2 = VectorField([zero] * m + [one, zero], names, n)
        pi1 = [var[i] + var[ti] * gam[i] for i in range(m)] + [var[ti]]
        pi2 = [var[i] for i in range(m)] + [var[si]]

    elif spec.kind == "diffeo":
        if not spec.gamma or len(spec.gamma) != n - 1:
            raise SpecError(f"diffeomorphism family needs {n - 1} components")
        t = n - 1
        gam = [rp(e) for e in spec.gamma]
        for i, g in enumerate(gam):
            if g.substitute({t: 0}) != var[i]:
                raise SpecError(f"gamma(x,0) must equal x (component {i + 1} differs)")
        D = [[g.diff(j) for j in range(n - 1)] for g in gam]
        dt = [g.diff(t) for g in gam]
        detD = det(D)
        origin = {i: v for i, v in enumerate(spec.point())}
        if detD.substitute(origin).is_zero():
            raise SpecError("D_x gamma is singular at the base point: not a local diffeomorphism family")
        adj = _adjugate(D)
        adj_dt = [sum((adj[i][j] * dt[j] for j in range(n - 1)), zero) for i in range(n - 1)]
        W = [-(a / detD) for a in adj_dt]
        if detD.is_constant():
            X1 = VectorField(W + [one], names, n)
        else:
            X1 = VectorField([-a for a in adj_dt] + [detD], names, n)
            warnings.append(
                f"X1 rescaled by det(D_x gamma) = {detD.to_str(names)} to keep polynomial coefficients"
            )
        X2 = VectorField([zero] * (n - 1) + [one], names, n)
        pi1 = gam
        pi2 = [var[i] for i in range(n - 1)]
    else:
        raise SpecError(f"unknown operator kind {spec.kind!r}")

    pt = spec.point()
    for label, X in (("X1", X1), ("X2", X2)):
        val = X.evaluate(pt)
        if all(is_field_zero(v) for v in val):
            raise SpecError(f"{label} vanishes at the base point")
    return FieldData(X1, X2, pi1, pi2, n, names, pt, W, warnings)
