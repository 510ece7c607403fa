"""Newton polytopes of commutator degrees and the associated exponent regions.

Points of the polytope live in degree space ``(d1, d2)``; points of the
region live in ``(1/p1, 1/p2')`` space.  The two are related by
``c_from_p`` and exact membership in one must agree with the other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .polyalg import RationalFn, as_fraction
from .vfcalc import (
    Degree,
    Echelon,
    WordTable,
    Word,
    hormander_check,
    is_field_zero,
    lambda_I,
    nonvanishing_condition,
)

__all__ = [
    "INF",
    "Generator",
    "NewtonPolytope",
    "ExponentRegion",
    "LebesguePair",
    "TrivialRegimeError",
    "HormanderFailure",
    "InconsistencyError",
    "spanning_tuples",
    "generators",
    "newton_polytope",
    "map_degree_to_exponent",
    "exponent_region",
    "c_from_p",
    "classify_pair",
    "separating_halfplane",
    "analysis_report",
    "frac_str",
]

INTERIOR = "interior"
BOUNDARY = "boundary"
EXTERIOR = "exterior"

STRONG = "strong-type"
ENDPOINT = "endpoint/boundary"
FAILS = "fails restricted weak-type"
TRIVIAL = "trivially bounded"


class TrivialRegimeError(ValueError):
    """Raised when p2' <= p1: bounded for trivial reasons, no polytope test applies."""


class HormanderFailure(ValueError):
    """No spanning tuple among the tabulated words."""


class InconsistencyError(RuntimeError):
    """Polytope and region membership disagree."""


def frac_str(x) -> str:
    if isinstance(x, _Infinity):
        return "inf"
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


# ---------------------------------------------------------------------------
# generator search

@dataclass(frozen=True)
class Generator:
    degree: Degree
    witness: tuple[Word, ...]
    value: object  # Fraction or RationalFn
    condition: str | None = None

    def to_json(self, names: Sequence[str] = ()) -> dict:
        val = self.value
        return {
            "degree": list(self.degree.as_tuple()),
            "witness": [str(w) for w in self.witness],
            "lambda": frac_str(val) if not isinstance(val, RationalFn) else val.to_str(names),
            "condition": self.condition,
        }


def _candidates(table: WordTable, point: Sequence) -> list[tuple[Word, tuple]]:
    """Nonzero evaluated words, deduplicated up to parallelism within a degree."""
    out: list[tuple[Word, tuple, tuple]] = []
    seen: dict[tuple, int] = {}
    for w in sorted(table.nonzero_words(), key=lambda w: (w.degree.total, w.sort_key())):
        vec = table[w].evaluate(point)
        piv = next((i for i, a in enumerate(vec) if not is_field_zero(a)), None)
        if piv is None:
            continue
        lead = vec[piv]
        direction = tuple(a / lead for a in vec)
        key = (w.degree, direction)
        if key in seen:
            k = seen[key]
            old = out[k][1]
            if isinstance(lead, Fraction) and abs(lead) > abs(old[piv]):
                out[k] = (out[k][0], vec, direction)
            continue
        seen[key] = len(out)
        out.append((w, vec, direction))
    return [(w, vec) for w, vec, _ in out]


def spanning_tuples(table: WordTable, point: Sequence, tuple_degree_cap: Degree | None = None,
                    pareto_only: bool = False, known: Iterable[Degree] = ()):
    """Enumerate independent n-subsets of the candidate words.

    Yields ``(words, degree)``.  With ``pareto_only`` partial tuples whose
    degree already dominates a found degree are abandoned.
    """
    n = table.dim
    cands = _candidates(table, point)
    found: list[Degree] = list(known)
    m = len(cands)

    def dominated(d: Degree) -> bool:
        return any(g.leq(d) for g in found)

    def rec(start: int, chosen: list[Word], deg: Degree, ech: Echelon):
        if len(chosen) == n:
            if pareto_only:
                if dominated(deg):
                    return
                found[:] = [g for g in found if not deg.leq(g)]
                found.append(deg)
            yield tuple(chosen), deg
            return
        for i in range(start, m - (n - len(chosen)) + 1):
            w, vec = cands[i]
            d = deg + w.degree
            if tuple_degree_cap is not None and not d.leq(tuple_degree_cap):
                continue
            if pareto_only and dominated(d):
                continue
            e2 = ech.copy()
            if not e2.try_add(vec):
                continue
            chosen.append(w)
            yield from rec(i + 1, chosen, d, e2)
            chosen.pop()

    yield from rec(0, [], Degree(0, 0), Echelon(n))


def generators(table: WordTable, point: Sequence, tuple_degree_cap: Degree | None = None) -> list[Generator]:
    """Pareto-minimal degrees of spanning tuples, each with one witness.

    Default cap: twice the degree of the lowest-degree witness, componentwise.
    """
    hc = hormander_check(table, point)
    if not hc.spans:
        raise HormanderFailure(hc.message)
    if tuple_degree_cap is None:
        d0 = hc.witness[1]
        tuple_degree_cap = Degree(2 * d0.d1, 2 * d0.d2)
    best: dict[Degree, tuple[Word, ...]] = {}
    for words, deg in spanning_tuples(table, point, tuple_degree_cap, pareto_only=True):
        for d in [d for d in best if deg.leq(d)]:
            del best[d]
        if not any(d.leq(deg) for d in best):
            best[deg] = words
    names = table.X1.names
    out = []
    for deg in sorted(best, key=lambda d: (d.d1, d.d2)):
        I = best[deg]
        val = lambda_I(table, I, point)
        out.append(Generator(deg, I, val, nonvanishing_condition(val, names)))
    return out


# ---------------------------------------------------------------------------
# Newton polytope

def _pareto(points: Iterable[tuple]) -> list[tuple]:
    pts = sorted(set(points))
    out = []
    for p in pts:
        if out and out[-1][1] <= p[1]:
            continue
        out.append(p)
    return out


@dataclass
class NewtonPolytope:
    generators: list[Generator]
    vertices: list[Degree]

    def _verts(self):
        return [(Fraction(v.d1), Fraction(v.d2)) for v in self.vertices]

    def membership(self, point) -> str:
        """Exact classification of a point of degree space."""
        p = (as_fraction(point[0]), as_fraction(point[1]))
        vs = self._verts()
        vals = [p[0] - vs[0][0], p[1] - vs[-1][1]]
        for a, b in zip(vs, vs[1:]):
            vals.append(_cross(a, b, p))
        if any(v < 0 for v in vals):
            return EXTERIOR
        if any(v == 0 for v in vals):
            return BOUNDARY
        return INTERIOR


def newton_polytope(gens: Iterable) -> NewtonPolytope:
    """Staircase convex hull of the generators plus the positive quadrant."""
    gens = list(gens)
    if not gens:
        raise ValueError("empty generator set")
    degs = [g.degree if isinstance(g, Generator) else Degree(*g) for g in gens]
    pts = _pareto(d.as_tuple() for d in degs)
    chain: list[tuple] = []
    for p in pts:
        while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
            chain.pop()
        chain.append(p)
    gl = [g if isinstance(g, Generator) else Generator(Degree(*g), (), None) for g in gens]
    return NewtonPolytope(gl, [Degree(*p) for p in chain])


# ---------------------------------------------------------------------------
# exponent region

def map_degree_to_exponent(d) -> tuple[Fraction, Fraction]:
    d1, d2 = (d.d1, d.d2) if isinstance(d, Degree) else d
    s = d1 + d2 - 1
    if s <= 0:
        raise ValueError(f"degree {d} has d1 + d2 < 2")
    return Fraction(d1, s), Fraction(d1 - 1, s)


@dataclass
class ExponentRegion:
    vertices: list[tuple[Fraction, Fraction]]  # counterclockwise from (0,0)

    def membership(self, point) -> str:
        p = (as_fraction(point[0]), as_fraction(point[1]))
        vs = self.vertices
        vals = [_cross(vs[i], vs[(i + 1) % len(vs)], p) for i in range(len(vs))]
        if any(v < 0 for v in vals):
            return EXTERIOR
        if any(v == 0 for v in vals):
            return BOUNDARY
        return INTERIOR

    def svg_points(self) -> str:
        return " ".join(f"{float(u):.6g},{float(v):.6g}" for u, v in self.vertices)


def exponent_region(gens: Iterable) -> ExponentRegion:
    gens = list(gens)
    if not gens:
        raise ValueError("empty generator set")
    pts = {(Fraction(0), Fraction(0)), (Fraction(1), Fraction(1))}
    for g in gens:
        u, v = map_degree_to_exponent(g.degree if isinstance(g, Generator) else g)
        if not (0 <= v < u <= 1):
            raise ValueError(f"image {(u, v)} leaves the L^p-improving half-plane")
        pts.add((u, v))
    pts = sorted(pts)
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return ExponentRegion(lower[:-1] + upper[:-1])


# ---------------------------------------------------------------------------
# exponents

class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def _parse_exp(x):
    if isinstance(x, _Infinity):
        return INF
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return INF
        x = Fraction(s)
    return as_fraction(x)


def recip(p) -> Fraction:
    return Fraction(0) if p is INF else 1 / p


def _from_recip(r: Fraction):
    return INF if r == 0 else 1 / r


@dataclass(frozen=True)
class LebesguePair:
    p1: object
    p2: object

    def __post_init__(self):
        p1, p2 = _parse_exp(self.p1), _parse_exp(self.p2)
        for p in (p1, p2):
            if p is not INF and p < 1:
                raise ValueError(f"exponent {p} below 1")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    @classmethod
    def from_p1_q(cls, p1, q) -> "LebesguePair":
        """Build from p1 and the target exponent q = p2'."""
        q = _parse_exp(q)
        return cls(p1, _from_recip(1 - recip(q)))

    @property
    def p2_dual(self):
        return _from_recip(1 - recip(self.p2))

    def region_point(self) -> tuple[Fraction, Fraction]:
        """(1/p1, 1/p2')."""
        return recip(self.p1), 1 - recip(self.p2)

    def is_trivial(self) -> bool:
        u, v = self.region_point()
        return v >= u

    def __str__(self):
        return f"(p1={frac_str(self.p1)}, p2={frac_str(self.p2)}, p2'={frac_str(self.p2_dual)})"


def c_from_p(pair: LebesguePair) -> tuple[Fraction, Fraction]:
    """``c1 = p2/(p1+p2-p1 p2)``, ``c2 = p1/(p1+p2-p1 p2)``, with 1/inf = 0."""
    a, b = recip(pair.p1), recip(pair.p2)
    s = a + b - 1
    if s == 0:
        raise TrivialRegimeError(f"{pair}: p2' = p1, trivially bounded regime; no polytope test applies")
    return a / s, b / s


def classify_pair(polytope: NewtonPolytope | None, region: ExponentRegion | None, pair: LebesguePair) -> str:
    """Verdict for one exponent pair.  Trivial queries never touch the polytope."""
    if pair.is_trivial():
        return TRIVIAL
    c = c_from_p(pair)
    m1 = polytope.membership(c)
    m2 = region.membership(pair.region_point())
    if m1 != m2:
        raise InconsistencyError(f"{pair}: polytope says {m1}, region says {m2}")
    return {INTERIOR: STRONG, BOUNDARY: ENDPOINT, EXTERIOR: FAILS}[m1]


def separating_halfplane(polytope: NewtonPolytope, c) -> tuple[Fraction, Fraction]:
    """A half-plane ``a1 x1 + a2 x2 >= 1`` containing the polytope, with
    ``0 < a1, a2 < 1`` and ``a.c < 1`` for an exterior point c.

    Candidates are edge supporting lines and, at each vertex v, the normal
    ``(1/(2 v1), 1/(2 v2))``; the most violated feasible one is returned,
    ties broken toward balanced coefficients.
    """
    c = (as_fraction(c[0]), as_fraction(c[1]))
    vs = [(Fraction(v.d1), Fraction(v.d2)) for v in polytope.vertices]
    cands = []
    for p, q in zip(vs, vs[1:]):
        # line through p, q: a.x = 1
        den = p[0] * q[1] - p[1] * q[0]
        if den != 0:
            cands.append(((q[1] - p[1]) / den, (p[0] - q[0]) / den))
    for v in vs:
        cands.append((1 / (2 * v[0]), 1 / (2 * v[1])) if v[0] and v[1] else None)
    best = None
    for a in cands:
        if a is None or not (0 < a[0] < 1 and 0 < a[1] < 1):
            continue
        if any(a[0] * v[0] + a[1] * v[1] < 1 for v in vs):
            continue
        val = a[0] * c[0] + a[1] * c[1]
        key = (val, abs(a[0] - a[1]))
        if best is None or key < best[0]:
            best = (key, a)
    if best is None or best[0][0] >= 1:
        raise ValueError(f"no separating half-plane: {c} is not exterior")
    return best[1]


# ---------------------------------------------------------------------------
# report

def analysis_report(gens: list[Generator], poly: NewtonPolytope, region: ExponentRegion,
                    queries: Iterable[LebesguePair] = (), names: Sequence[str] = (),
                    cap=None, extra: dict | None = None) -> dict:
    rep = {
        "generators": [g.to_json(names) for g in gens],
        "polytope_vertices": [list(v.as_tuple()) for v in poly.vertices],
        "region_vertices": [[frac_str(u), frac_str(v)] for u, v in region.vertices],
        "tuple_degree_cap": list(cap.as_tuple()) if cap is not None else None,
        "queries": [],
    }
    for q in queries:
        entry = {"p1": frac_str(q.p1), "p2": frac_str(q.p2), "p2_dual": frac_str(q.p2_dual)}
        entry["verdict"] = classify_pair(poly, region, q)
        if entry["verdict"] != TRIVIAL:
            c1, c2 = c_from_p(q)
            entry["c"] = [frac_str(c1), frac_str(c2)]
        rep["queries"].append(entry)
    if extra:
        rep.update(extra)
    return rep


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False)
