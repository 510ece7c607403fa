"""Combinatorics of grid sets: restricted weak-type ratios, widths of
one-dimensional sets, central sets, polynomial sublevel pruning and the
minimal-dyadic-interval refinement along one family of curves.

One-dimensional sets are exact unions of half-open intervals with rational
endpoints.  Dyadic intervals are ``[k 2^j, (k+1) 2^j)`` anchored at 0.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
import sympy

from .polyalg import RationalFn, as_fraction

__all__ = [
    "IntervalSet",
    "GridSet",
    "WidthResult",
    "CentralCheck",
    "PruneResult",
    "SheafReport",
    "threshold",
    "dyadic_mass_profile",
    "width_of",
    "is_central",
    "monotonicity_constant",
    "prune_polynomial",
    "rwt_ratio",
    "sheaf_refine",
    "extremal_search",
    "fiber_central_checks",
    "CENTRAL_CONSTANT",
]

# published constant for central-set checks: any interval is covered by two
# dyadic intervals of at most twice its length, which turns the per-dyadic
# bound (constant 1) into 2 * 2^eps <= 4.
CENTRAL_CONSTANT = 4


# ---------------------------------------------------------------------------
# exact interval unions

class IntervalSet:
    """Finite disjoint union of half-open intervals ``[a, b)`` with rational ends."""

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[tuple] = ()):
        ivs = sorted((as_fraction(a), as_fraction(b)) for a, b in intervals)
        merged: list[list[Fraction]] = []
        for a, b in ivs:
            if b <= a:
                continue
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        self.intervals = tuple((a, b) for a, b in merged)

    @classmethod
    def from_cells(cls, indices: Iterable[int], h=1) -> "IntervalSet":
        h = as_fraction(h)
        return cls((i * h, (i + 1) * h) for i in indices)

    @property
    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def is_empty(self) -> bool:
        return not self.intervals

    def sup_abs(self) -> Fraction:
        if not self.intervals:
            return Fraction(0)
        return max(abs(self.intervals[0][0]), abs(self.intervals[-1][1]))

    def mass_in(self, lo, hi) -> Fraction:
        total = Fraction(0)
        for a, b in self.intervals:
            if b <= lo:
                continue
            if a >= hi:
                break
            total += min(b, hi) - max(a, lo)
        return total

    def intersect(self, lo, hi) -> "IntervalSet":
        return IntervalSet((max(a, lo), min(b, hi)) for a, b in self.intervals if b > lo and a < hi)

    def subtract(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a, b in self.intervals:
            cur = a
            for c, d in other.intervals:
                if d <= cur or c >= b:
                    continue
                if c > cur:
                    out.append((cur, c))
                cur = max(cur, d)
                if cur >= b:
                    break
            if cur < b:
                out.append((cur, b))
        return IntervalSet(out)

    def shift(self, s) -> "IntervalSet":
        s = as_fraction(s)
        return IntervalSet((a + s, b + s) for a, b in self.intervals)

    def scale(self, lam) -> "IntervalSet":
        lam = as_fraction(lam)
        if lam <= 0:
            raise ValueError("scale factor must be positive")
        return IntervalSet((a * lam, b * lam) for a, b in self.intervals)

    def issubset(self, other: "IntervalSet") -> bool:
        return self.subtract(other).is_empty()

    def endpoints(self) -> list[Fraction]:
        return [x for iv in self.intervals for x in iv]

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __repr__(self):
        body = ", ".join(f"[{a}, {b})" for a, b in self.intervals)
        return f"IntervalSet({body})"


# ---------------------------------------------------------------------------
# widths

def threshold(length, ambient, eps: float, measure) -> float:
    """Stopping-time threshold ``(1/4) (|I|/L)^eps |S|``."""
    return 0.25 * (float(length) / float(ambient)) ** eps * float(measure)


def _dyadic_candidates(S: IntervalSet, scale: Fraction) -> list[Fraction]:
    """Left ends of dyadic intervals that can realize the largest mass at this scale.

    An interval containing no endpoint of S is either inside one component
    (mass = scale, and the leftmost such is the first fully interior one) or
    disjoint from S.
    """
    ks = set()
    for a, b in S.intervals:
        ka = math.floor(a / scale)
        kb = math.floor(b / scale)
        ks.add(ka)
        ks.add(kb)
        if b == kb * scale:
            ks.add(kb - 1)
        first_full = math.ceil(a / scale)
        if (first_full + 1) * scale <= b:
            ks.add(first_full)
    return sorted(k * scale for k in ks)


def best_dyadic(S: IntervalSet, scale: Fraction) -> tuple[Fraction, tuple[Fraction, Fraction]]:
    """Largest ``|I cap S|`` over dyadic I of the given length, leftmost on ties."""
    best = (Fraction(-1), None)
    for lo in _dyadic_candidates(S, scale):
        m = S.mass_in(lo, lo + scale)
        if m > best[0]:
            best = (m, (lo, lo + scale))
    return best


@dataclass
class WidthResult:
    width: Fraction
    interval: tuple[Fraction, Fraction]
    mass: Fraction
    ambient: Fraction
    profile: list[dict] = field(default_factory=list)


def _coarsest_scale(C: Fraction) -> Fraction:
    s = Fraction(1)
    while s < C:
        s *= 2
    while s / 2 >= C:
        s /= 2
    return s


def _finest_scale(measure: Fraction, ambient: Fraction, eps: float) -> float:
    # mass <= |I|, so nothing finer than this can pass the threshold;
    # shaved slightly so rounding never skips a boundary scale
    bound = (0.25 * float(measure) * float(ambient) ** (-eps)) ** (1.0 / (1.0 - eps))
    return bound * (1 - 1e-9)


def width_of(S: IntervalSet, eps: float, C=None, min_scale=None) -> WidthResult:
    """Minimal dyadic length whose best interval holds ``(1/4)(|I|/2C)^eps |S|``.

    ``C`` is the ambient half-width (defaults to ``sup |x|`` over S); the
    ambient length ``L = 2C`` normalizes the threshold so results commute
    with dilation.  The coarsest scale checked is the smallest power of two
    not below C, where a dyadic half always holds at least half the mass.
    """
    if S.is_empty():
        raise ValueError("empty set")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    mu = S.measure
    C = S.sup_abs() if C is None else as_fraction(C)
    L = 2 * C
    finest = _finest_scale(mu, L, eps)
    if min_scale is not None:
        finest = max(finest, float(min_scale))
    scale = _coarsest_scale(C)
    result = None
    profile = []
    while float(scale) >= finest or result is None:
        m, iv = best_dyadic(S, scale)
        thr = threshold(scale, L, eps, mu)
        ok = float(m) >= thr
        profile.append({"scale": scale, "mass": m, "threshold": thr, "passes": ok})
        if ok:
            result = (scale, iv, m)
        scale /= 2
    w, iv, m = result
    return WidthResult(w, iv, m, C, profile)


def dyadic_mass_profile(S: IntervalSet, scales: Iterable[Fraction]) -> list[tuple[Fraction, Fraction]]:
    return [(s, best_dyadic(S, s)[0]) for s in scales]


@dataclass
class CentralCheck:
    passed: bool
    worst_interval: tuple | None
    worst_ratio: float
    support_ok: bool


def is_central(S: IntervalSet, w, eps: float, constant: float = CENTRAL_CONSTANT,
               min_scale=None) -> CentralCheck:
    """Exhaustive dyadic check of ``|J cap S| <= constant (|J|/w)^eps |S|``
    and of ``|x| <= constant * w`` on S.

    Dyadic J range over all scales from the one covering ``[-constant w,
    constant w]`` down to the finest scale at which a violation is possible
    (or ``min_scale`` for sets resolved only to a grid).
    """
    if S.is_empty():
        raise ValueError("empty set")
    w = as_fraction(w)
    mu = S.measure
    support_ok = S.sup_abs() <= constant * w
    # a violation needs |J| > constant (|J|/w)^eps |S|
    finest = (constant * float(mu) * float(w) ** (-eps)) ** (1.0 / (1.0 - eps))
    # always report the profile at least a dozen scales below w
    floor = min(finest, float(w) / 4096) / 2
    if min_scale is not None:
        floor = max(floor, float(min_scale))
    scale = _coarsest_scale(constant * w) * 2
    worst = (0.0, None)
    while float(scale) >= floor:
        m, iv = best_dyadic(S, scale)
        bound = (float(scale) / float(w)) ** eps * float(mu)
        r = float(m) / bound
        if r > worst[0]:
            worst = (r, iv)
        scale /= 2
    return CentralCheck(support_ok and worst[0] <= constant, worst[1], worst[0], support_ok)


def monotonicity_constant(eps: float, constant: float = CENTRAL_CONSTANT) -> float:
    """If ``S1 subset S2`` are central (widths w1, w2, same constant) then
    ``w1 <= monotonicity_constant * w2``: S1 lies in an interval of length
    ``2 c w2`` which must hold all of it, so ``1 <= c (2 c w2 / w1)^eps``."""
    return 2 * constant * constant ** (1.0 / eps)


# ---------------------------------------------------------------------------
# polynomial pruning

@dataclass
class PruneResult:
    kept: IntervalSet
    removed: IntervalSet
    ratio: Fraction
    tau: Fraction
    derivative_order: int
    roots: list[Fraction]


def _poly_coeffs(P) -> list[Fraction]:
    """Coefficients low to high; accepts a sequence or a univariate RationalFn/MultiPoly."""
    if hasattr(P, "terms") or isinstance(P, RationalFn):
        poly = P.num if isinstance(P, RationalFn) else P
        if isinstance(P, RationalFn) and not P.den.is_constant():
            raise ValueError("polynomial expected")
        scale = 1 / P.den.constant_value() if isinstance(P, RationalFn) else Fraction(1)
        if poly.nvars != 1:
            raise ValueError("univariate polynomial expected")
        deg = poly.total_degree() if not poly.is_zero() else 0
        cs = [Fraction(0)] * (deg + 1)
        for (e,), c in poly.terms.items():
            cs[e] = c * scale
        return cs
    cs = [as_fraction(c) for c in P]
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    return cs or [Fraction(0)]


def _peval(cs: list[Fraction], t: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(cs):
        acc = acc * t + c
    return acc


def _real_roots(cs: list[Fraction], lo: Fraction, hi: Fraction, tol: Fraction) -> list[Fraction]:
    """Exact isolation (sympy) refined to ``tol``; returns interval midpoints."""
    if all(c == 0 for c in cs[1:]):
        return []
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(cs)], x, domain="QQ")
    ivs = poly.intervals(eps=sympy.Rational(tol.numerator, tol.denominator),
                         inf=sympy.Rational(lo.numerator, lo.denominator),
                         sup=sympy.Rational(hi.numerator, hi.denominator))
    out = []
    for (a, b), _mult in ivs:
        out.append((Fraction(int(a.p), int(a.q)) + Fraction(int(b.p), int(b.q))) / 2)
    return sorted(set(out))


def prune_polynomial(P, S: IntervalSet, w, m: int, C=None, budget: float = 1e6,
                     tol=None) -> PruneResult:
    """Remove ``{|P| <= w^(m + 2d)}`` from S.

    Requires ``|P^(j)(0)| >= w^m`` for some ``j <= d``; the smallest such j
    is reported.  Boundaries of the sublevel set are the real roots of
    ``P - tau`` and ``P + tau``, isolated exactly and refined to ``tol``.
    """
    if S.is_empty():
        raise ValueError("empty set")
    cs = _poly_coeffs(P)
    d = len(cs) - 1
    w = as_fraction(w)
    tau = w ** (m + 2 * d)
    C = S.sup_abs() if C is None else as_fraction(C)
    tol = as_fraction(tol) if tol is not None else w ** (m + 2 * d + 2) / 1024
    # sup-norm budget, checked on a fine rational mesh
    mesh = [C * Fraction(2 * k - 256, 256) for k in range(257)]
    if max(abs(float(_peval(cs, t))) for t in mesh) > budget:
        raise ValueError(f"|P| exceeds the budget {budget} on [-C, C]")
    order = None
    fact = 1
    deriv = list(cs)
    for j in range(d + 1):
        if j:
            fact *= j
            deriv = [k * deriv[k] for k in range(1, len(deriv))] or [Fraction(0)]
        if abs(deriv[0]) >= w ** m:
            order = j
            break
    if order is None:
        raise ValueError(f"no derivative of order <= {d} satisfies |P^(j)(0)| >= w^{m}")
    lo, hi = -C - 1, C + 1
    roots = []
    if d >= 1:
        up = list(cs)
        up[0] -= tau
        dn = list(cs)
        dn[0] += tau
        roots = sorted(set(_real_roots(up, lo, hi, tol) + _real_roots(dn, lo, hi, tol)))
    # classify the pieces between consecutive boundary points
    cuts = [lo] + [r for r in roots if lo < r < hi] + [hi]
    removed = []
    for a, b in zip(cuts, cuts[1:]):
        mid = (a + b) / 2
        if abs(_peval(cs, mid)) <= tau:
            removed.append((a, b))
    removed_set = IntervalSet(removed)
    kept = S.subtract(removed_set)
    return PruneResult(kept, removed_set.intersect(-C - 1, C + 1), kept.measure / S.measure, tau, order, roots)


# ---------------------------------------------------------------------------
# grid sets

@dataclass
class GridSet:
    """Cells ``prod [i_k h, (i_k + 1) h)`` indexed by integer tuples."""

    n: int
    h: Fraction
    cells: np.ndarray  # (m, n) int64, unique, lexicographically sorted
    lo: tuple = ()
    hi: tuple = ()

    def __post_init__(self):
        self.h = as_fraction(self.h)
        arr = np.asarray(self.cells, dtype=np.int64).reshape(-1, self.n)
        self.cells = np.unique(arr, axis=0) if len(arr) else arr
        if not self.lo and len(arr):
            self.lo = tuple(float(v) * float(self.h) for v in self.cells.min(axis=0))
            self.hi = tuple(float(v + 1) * float(self.h) for v in self.cells.max(axis=0))

    @classmethod
    def from_points(cls, points: np.ndarray, h) -> "GridSet":
        pts = np.asarray(points, dtype=float)
        idx = np.floor(pts / float(as_fraction(h))).astype(np.int64)
        return cls(pts.shape[1], h, idx)

    @classmethod
    def box(cls, lo: Sequence[int], hi: Sequence[int], h) -> "GridSet":
        """All cells with ``lo[k] <= i_k < hi[k]``."""
        axes = [np.arange(a, b) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        return cls(len(lo), h, mesh)

    @property
    def count(self) -> int:
        return int(self.cells.shape[0])

    @property
    def measure(self) -> float:
        return self.count * float(self.h) ** self.n

    def centers(self) -> np.ndarray:
        return (self.cells + 0.5) * float(self.h)

    def issubset(self, other: "GridSet") -> bool:
        a = {tuple(r) for r in self.cells.tolist()}
        b = {tuple(r) for r in other.cells.tolist()}
        return a <= b

    def project(self, pi: Callable[[np.ndarray], np.ndarray] | None = None, drop: int | None = None) -> "GridSet":
        """Image under a coordinate map applied to cell centres (or by dropping an axis)."""
        if drop is not None:
            keep = [k for k in range(self.n) if k != drop]
            return GridSet(self.n - 1, self.h, self.cells[:, keep])
        return GridSet.from_points(pi(self.centers()), self.h)

    # run-length text format -------------------------------------------------
    def dumps(self) -> str:
        lines = ["gridset 1", f"dims {self.n}", f"h {self.h}",
                 "lo " + " ".join(repr(float(v)) for v in self.lo),
                 "hi " + " ".join(repr(float(v)) for v in self.hi),
                 "runs"]
        runs = []
        cur = None
        for row in self.cells.tolist():
            head, last = tuple(row[:-1]), row[-1]
            if cur and cur[0] == head and cur[1] + cur[2] == last:
                cur[2] += 1
            else:
                if cur:
                    runs.append(cur)
                cur = [head, last, 1]
        if cur:
            runs.append(cur)
        for head, start, length in runs:
            lines.append(" ".join(str(v) for v in (*head, start, length)))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "GridSet":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "gridset 1":
            raise ValueError("not a gridset file")
        header = {}
        i = 1
        while lines[i] != "runs":
            key, _, val = lines[i].partition(" ")
            header[key] = val
            i += 1
        n = int(header["dims"])
        h = Fraction(header["h"])
        lo = tuple(float(v) for v in header.get("lo", "").split())
        hi = tuple(float(v) for v in header.get("hi", "").split())
        cells = []
        for ln in lines[i + 1:]:
            vals = [int(v) for v in ln.split()]
            if len(vals) != n + 1:
                raise ValueError(f"bad run line {ln!r}")
            head, start, length = vals[: n - 1], vals[n - 1], vals[n]
            for k in range(length):
                cells.append(head + [start + k])
        return cls(n, h, np.array(cells, dtype=np.int64).reshape(-1, n), lo, hi)


def _as_map(pi, n: int):
    if callable(pi):
        return pi
    from .ccflow import compile_map

    return compile_map(list(pi), n)


@dataclass
class RatioResult:
    omega: float
    pi1: float
    pi2: float
    alpha1: float
    alpha2: float
    ratio: float


def _recip(p) -> float:
    from .polytope import recip

    return float(recip(p))


def rwt_ratio(omega: GridSet, pi1, pi2, p1, p2) -> RatioResult:
    """``|Omega| / (|pi1 Omega|^{1/p1} |pi2 Omega|^{1/p2})`` by cell counting.

    ``pi_j`` may be an axis index to drop, a callable on points, or a list of
    coordinate expressions.
    """
    if omega.count == 0:
        raise ValueError("empty set")

    def proj(pi):
        if isinstance(pi, int):
            return omega.project(drop=pi)
        return omega.project(_as_map(pi, omega.n))

    P1, P2 = proj(pi1), proj(pi2)
    mo, m1, m2 = omega.measure, P1.measure, P2.measure
    ratio = mo / (m1 ** _recip(p1) * m2 ** _recip(p2))
    return RatioResult(mo, m1, m2, mo / m1, mo / m2, ratio)


# ---------------------------------------------------------------------------
# sheaf refinement

@dataclass
class FiberCertificate:
    key: tuple
    interval: tuple
    width: int
    mass: int
    fiber_mass: int


@dataclass
class SheafReport:
    refined: GridSet
    direction: int
    width_cells: int
    width: float
    ratio: float
    histogram: dict
    certificates: list[FiberCertificate]
    fibers: dict  # key -> IntervalSet (cell units) of the refined fibre
    approximate: bool
    straightening: str
    ambient: Fraction
    eps: float

    def to_json(self) -> str:
        return json.dumps({
            "direction": self.direction,
            "width_cells": self.width_cells,
            "width": self.width,
            "measure_ratio": self.ratio,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "approximate": self.approximate,
            "straightening": self.straightening,
            "fibers": len(self.fibers),
            "certificates": [
                {"key": list(c.key), "interval": [str(c.interval[0]), str(c.interval[1])],
                 "width": c.width, "mass": c.mass, "fiber_mass": c.fiber_mass}
                for c in self.certificates
            ],
        }, indent=2)


def _straighten(omega: GridSet, X, axis: int | None):
    """Fibre keys and time indices of every cell.

    If X is a coordinate field ``d/dx_k`` the split is exact.  Otherwise a
    coordinate k along which X has a nonzero constant component c is used:
    the time is ``x_k / c`` and the key is the flow-back point on ``x_k = 0``.
    """
    from .ccflow import compile_field, flow_batch, FlowConfig

    if X is None:
        if axis is None:
            raise ValueError("need a field or an axis")
        keep = [k for k in range(omega.n) if k != axis]
        return omega.cells[:, keep], omega.cells[:, axis], False, f"exact: axis {axis}"
    comps = X.components
    for k, c in enumerate(comps):
        others_zero = all(o.is_zero() for i, o in enumerate(comps) if i != k)
        if c.is_constant() and c.constant_value() == 1 and others_zero:
            keep = [i for i in range(omega.n) if i != k]
            return omega.cells[:, keep], omega.cells[:, k], False, f"exact: coordinate field d/d{X.names[k]}"
    k = next((i for i, c in enumerate(comps) if c.is_constant() and c.constant_value() != 0), None)
    if k is None:
        raise ValueError("cannot straighten: no coordinate with a constant nonzero component")
    c = float(comps[k].constant_value())
    hf = float(omega.h)
    pts = omega.centers()
    tau = pts[:, k] / c
    y, ok = flow_batch(compile_field(X), pts, -tau, FlowConfig(h=hf / 8), strict=False)
    if not ok.all():
        raise ValueError("straightening flow failed: degenerate straightening")
    keep = [i for i in range(omega.n) if i != k]
    keys = np.floor(y[:, keep] / hf).astype(np.int64)
    times = np.floor(tau / hf).astype(np.int64)
    return keys, times, True, f"approximate: flow coordinates along axis {k} (component {c})"


def sheaf_refine(omega: GridSet, j: int, eps: float, X=None, axis: int | None = None) -> SheafReport:
    """Refine so every kept fibre is ``I(x) cap S(x)`` for a common dyadic width.

    Steps: keep fibres whose cell count is at least half the average
    ``alpha_j``; give each its minimal dyadic interval I(x); keep the width
    class with the largest total mass (coarsest on ties).  Work is in integer
    cell units and the finest admissible scale is one cell.
    """
    if omega.count == 0:
        raise ValueError("empty set")
    keys, times, approx, how = _straighten(omega, X, axis)
    fibers: dict[tuple, list[int]] = defaultdict(list)
    for key, t in zip(map(tuple, keys.tolist()), times.tolist()):
        fibers[key].append(t)
    alpha = omega.count / len(fibers)
    C = Fraction(max(max(abs(min(v)), abs(max(v) + 1)) for v in fibers.values()))
    level = {k: v for k, v in fibers.items() if len(set(v)) >= alpha / 2}
    chosen: dict[tuple, tuple] = {}
    by_width: dict[int, int] = defaultdict(int)
    for key in sorted(level):
        S = IntervalSet.from_cells(sorted(set(level[key])))
        wr = width_of(S, eps, C=C, min_scale=1)
        lo, hi = wr.interval
        Sp = S.intersect(lo, hi)
        chosen[key] = (wr, Sp, S)
        by_width[int(wr.width)] += int(Sp.measure)
    wbest = max(by_width, key=lambda w: (by_width[w], w))
    kept_rows = []
    certs = []
    out_fibers = {}
    # map back from (key, time) to cells
    index = defaultdict(list)
    for row, key, t in zip(omega.cells.tolist(), map(tuple, keys.tolist()), times.tolist()):
        index[(key, t)].append(row)
    for key, (wr, Sp, S) in chosen.items():
        if int(wr.width) != wbest:
            continue
        ts = [t for a, b in Sp.intervals for t in range(int(a), int(b))]
        for t in ts:
            kept_rows.extend(index[(key, t)])
        out_fibers[key] = Sp
        certs.append(FiberCertificate(key, wr.interval, int(wr.width), int(Sp.measure), int(S.measure)))
    refined = GridSet(omega.n, omega.h, np.array(kept_rows, dtype=np.int64).reshape(-1, omega.n))
    return SheafReport(refined, j, wbest, wbest * float(omega.h), refined.count / omega.count,
                       dict(by_width), certs, out_fibers, approx, how, C, eps)


def fiber_central_checks(report: SheafReport, constant: float = CENTRAL_CONSTANT):
    """Recentre every refined fibre at each of its cells and run is_central."""
    out = []
    for key, Sp in report.fibers.items():
        for a, b in Sp.intervals:
            for t in range(int(a), int(b)):
                out.append((key, t, is_central(Sp.shift(-t), report.width_cells, report.eps, constant, min_scale=1)))
    return out


# ---------------------------------------------------------------------------
# extremal search

@dataclass
class SearchResult:
    best: GridSet
    best_ratio: float
    seed_ratio: float
    trace: list[float]


def extremal_search(start: GridSet, pi1, pi2, p1, p2, budget: int, seed: int = 0,
                    moves_per_step: int = 8) -> SearchResult:
    """Seeded hill climbing over grid sets: toggle cells on the boundary,
    keep a move when the ratio does not decrease.  Never claims optimality."""
    from .polytope import LebesguePair

    if budget <= 0:
        raise ValueError("budget must be positive")
    pair = LebesguePair(p1, p2)
    if pair.is_trivial():
        from .polytope import TrivialRegimeError

        raise TrivialRegimeError("trivially bounded regime (p2' <= p1)")
    rng = np.random.default_rng(seed)
    cur = {tuple(r) for r in start.cells.tolist()}

    def ratio_of(cells) -> float:
        g = GridSet(start.n, start.h, np.array(sorted(cells), dtype=np.int64))
        return rwt_ratio(g, pi1, pi2, pair.p1, pair.p2).ratio

    best_r = seed_r = ratio_of(cur)
    trace = [best_r]
    n = start.n
    for _ in range(budget):
        members = sorted(cur)
        for _m in range(moves_per_step):
            if rng.uniform() < 0.5 and len(members) > 1:
                cell = members[rng.integers(len(members))]
                cand = cur - {cell}
            else:
                base = members[rng.integers(len(members))]
                k = rng.integers(n)
                step = rng.choice([-1, 1])
                cell = tuple(v + (step if i == k else 0) for i, v in enumerate(base))
                if cell in cur:
                    continue
                cand = cur | {cell}
            r = ratio_of(cand)
            if r >= best_r:
                cur, best_r = cand, r
                break
        trace.append(best_r)
    best = GridSet(start.n, start.h, np.array(sorted(cur), dtype=np.int64))
    return SearchResult(best, best_r, seed_r, trace)
