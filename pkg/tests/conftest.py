from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import lru_cache

import pytest
from hypothesis import settings

from curvelp.cli import parse_config, read_preset
from curvelp.polyalg import MultiPoly, RationalFn, parse_rational
from curvelp.polytope import INF, LebesguePair
from curvelp.vfcalc import VectorField, Word, build_words, spec_to_fields

settings.register_profile("curvelp", deadline=None, max_examples=50)
settings.load_profile("curvelp")

# verdict lines from test_acceptance, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


PRESETS = ["conv-parabola", "conv-poly", "xray", "r5-example", "secco", "commuting"]


@lru_cache(maxsize=None)
def preset_fields(name: str, n: int | None = None, param: tuple = ()):
    spec = parse_config(read_preset(name), n, list(param))
    return spec_to_fields(spec)


@lru_cache(maxsize=None)
def preset_table(name: str, n: int | None = None, param: tuple = (), cap: int = 8):
    fd = preset_fields(name, n, param)
    return fd, build_words(fd.X1, fd.X2, cap)


# every numeric preset with a rational base point; secco specialized at a = 0
NUMERIC_PRESETS = [
    ("conv-parabola", None, ()),
    ("conv-poly", 4, ()),
    ("conv-poly", 5, ()),
    ("xray", 4, ()),
    ("r5-example", None, ()),
    ("secco", None, ("a=0",)),
    ("secco", None, ("a=1/6",)),
    ("commuting", None, ()),
]


def random_poly(rng: random.Random, nvars: int, max_deg: int = 3, terms: int = 4) -> MultiPoly:
    out = {}
    for _ in range(rng.randint(0, terms)):
        exp = [0] * nvars
        for _ in range(rng.randint(0, max_deg)):
            exp[rng.randrange(nvars)] += 1
        out[tuple(exp)] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return MultiPoly(nvars, out)


def random_field(rng: random.Random, names, max_deg: int = 2) -> VectorField:
    n = len(names)
    comps = [RationalFn.from_poly(random_poly(rng, n, max_deg, 3)) for _ in range(n)]
    return VectorField(comps, tuple(names), n)


@pytest.fixture
def rng():
    return random.Random(20240611)


def gamma_derivative_field(curve_exprs, names, k):
    """gamma^(k)(t) . grad_x as a field in (x1..x_{n-1}, t)."""
    t = len(names) - 1
    comps = []
    for e in curve_exprs:
        g = parse_rational(e, names)
        for _ in range(k):
            g = g.diff(t)
        comps.append(g)
    return VectorField(comps + [RationalFn.zero(len(names))], names, len(names))


def prefix_sign(w: Word) -> int:
    head = w.letters[:2]
    return {(1, 2): -1, (2, 1): 1}.get(head, 0)


def random_pairs(region, count, seed):
    """Random nontrivial pairs, a third of them placed exactly on region edges."""
    rng = random.Random(seed)
    vs = region.vertices
    out = []
    while len(out) < count:
        kind = rng.random()
        if kind < 1 / 3:
            i = rng.randrange(len(vs))
            a, b = vs[i], vs[(i + 1) % len(vs)]
            lam = Fraction(rng.randint(1, 59), 60)
            u, v = a[0] + lam * (b[0] - a[0]), a[1] + lam * (b[1] - a[1])
        else:
            den = rng.choice([7, 12, 30, 97, 360])
            u, v = Fraction(rng.randint(1, den), den), Fraction(rng.randint(0, den - 1), den)
        if not (0 < u <= 1 and 0 <= v < 1 and v < u):
            continue
        out.append(LebesguePair.from_p1_q(1 / u, INF if v == 0 else 1 / v))
    return out


def brute_width(cells: set[int], h: Fraction, eps: float, C: Fraction, min_scale: Fraction):
    """Scan every dyadic interval at every scale from the coarsest down to min_scale.

    Mass is counted cell by cell; S is a union of grid cells of size h.
    """
    mu = len(cells) * h
    L = 2 * C
    top = Fraction(1)
    while top < C:
        top *= 2
    while top / 2 >= C:
        top /= 2
    best = None
    scale = top
    while scale >= min_scale:
        per = int(scale / h) if scale >= h else None
        lo_k = math.floor(-C / scale) - 1
        hi_k = math.ceil(C / scale) + 1
        winner = None
        for k in range(lo_k, hi_k + 1):
            a = k * scale
            if per is not None:
                first = int(a / h)
                mass = sum(1 for i in range(first, first + per) if i in cells) * h
            else:
                mass = h if math.floor(a / h) in cells else Fraction(0)
                mass = min(mass, scale)
            if winner is None or mass > winner[0]:
                winner = (mass, (a, a + scale))
        if float(winner[0]) >= 0.25 * (float(scale) / float(L)) ** eps * float(mu):
            best = (scale, winner[1])
        scale /= 2
    return best


def random_union(rng: random.Random) -> set[int]:
    cells = set()
    for _ in range(rng.randint(1, 5)):
        a = rng.randint(-64, 60)
        cells.update(range(a, min(64, a + rng.randint(1, 24))))
    return cells
