"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion <id>: PASS|FAIL`` line (also collected
for the terminal summary) and asserts its stated tolerance and time budget.
"""
from __future__ import annotations

import random
import time
from contextlib import contextmanager
from fractions import Fraction as F

import numpy as np
import pytest
import sympy

from curvelp.ccflow import (
    BallSpec,
    ball_scaling_study,
    commutator_defect,
    phi_volume_check,
    sample_ball,
    sharpness_probe,
)
from curvelp.cli import main
from curvelp.polytope import (
    TRIVIAL,
    LebesguePair,
    c_from_p,
    classify_pair,
    exponent_region,
    generators,
    newton_polytope,
)
from curvelp.setcomb import (
    GridSet,
    IntervalSet,
    fiber_central_checks,
    is_central,
    monotonicity_constant,
    prune_polynomial,
    sheaf_refine,
    width_of,
)
from curvelp.vfcalc import (
    OperatorSpec,
    VectorField,
    build_words,
    hormander_check,
    lie_bracket,
    spec_to_fields,
)

from .conftest import (
    ACCEPTANCE,
    NUMERIC_PRESETS,
    brute_width,
    gamma_derivative_field,
    prefix_sign,
    preset_fields,
    preset_table,
    random_field,
    random_pairs,
    random_union,
)


@contextmanager
def criterion(key: str, title: str, budget: float):
    """Run one criterion, print its verdict line and enforce the time budget."""
    t0 = time.perf_counter()
    notes: list[str] = []
    try:
        yield notes
    except BaseException as exc:
        line = f"criterion {key}: FAIL  {title}  ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        ACCEPTANCE.append(line)
        print(line)
        raise
    elapsed = time.perf_counter() - t0
    ok = elapsed < budget
    detail = "; ".join(notes)
    line = (f"criterion {key}: {'PASS' if ok else 'FAIL'}  {title}  [{elapsed:.1f}s / {budget:g}s]"
            + (f"  {detail}" if detail else ""))
    ACCEPTANCE.append(line)
    print(line)
    assert ok, f"over time budget: {elapsed:.1f}s"


def analysed(name, n=None, params=(), cap=8):
    fd, table = preset_table(name, n, params, cap)
    gens = generators(table, fd.point)
    return gens, newton_polytope(gens), exponent_region(gens)


def degree_set(gens):
    return {g.degree.as_tuple() for g in gens}


# -- 1. exact polytope and region reproduction ---------------------------------

def trapezoid(n):
    return {(F(0), F(0)), (F(n * n - 3 * n + 4, n * n - n), F(n - 2, n)),
            (F(2, n), F(2 * n - 4, n * n - n)), (F(1), F(1))}


def test_1a_convolution_trapezoid():
    with criterion("1a", "convolution regions n=3,4,5 equal the trapezoid formula", 30) as notes:
        for n, cap in ((3, 8), (4, 8), (5, 10)):
            t0 = time.perf_counter()
            _, _, region = analysed("conv-poly", n, (), cap)
            assert set(region.vertices) == trapezoid(n), (n, region.vertices)
            assert len(region.vertices) == (3 if n == 3 else 4)
            assert time.perf_counter() - t0 < 10
            notes.append(f"n={n} ok")


def test_1b_xray_triangle():
    with criterion("1b", "x-ray regions n=3..6 and witness degrees", 40) as notes:
        for n, cap in ((3, 8), (4, 8), (5, 10), (6, 14)):
            t0 = time.perf_counter()
            gens, _, region = analysed("xray", n, (), cap)
            vertex = (F(n * n - 3 * n + 4, n * (n - 1)), F(n - 2, n))
            assert region.vertices == [(0, 0), vertex, (1, 1)], (n, region.vertices)
            assert degree_set(gens) == {((n * n - 3 * n + 4) // 2, n - 1)}
            assert time.perf_counter() - t0 < 10
            notes.append(f"n={n} vertex {vertex[0]},{vertex[1]}")


def test_1c_r5_pentagon():
    with criterion("1c", "R^5 pentagon and Pareto generators", 10):
        gens, _, region = analysed("r5-example")
        assert region.vertices == [(0, 0), (F(4, 10), F(3, 10)), (F(5, 9), F(4, 9)),
                                   (F(7, 10), F(6, 10)), (1, 1)]
        assert degree_set(gens) == {(4, 7), (5, 5), (7, 4)}


def test_1d_secco():
    with criterion("1d", "parametric family brackets and a=1/6 triangle", 10):
        fd, table = preset_table("secco", None, ("a",), 3)
        names = fd.names
        assert table["12"] == VectorField.from_strings(["0", "2", "(6*a+1)*t + x1", "0"], names, 4)
        assert table["121"] == VectorField.from_strings(["0", "0", "1 - 6*a", "0"], names, 4)
        assert table["122"] == VectorField.from_strings(["0", "0", "-(6*a+1)", "0"], names, 4)
        _, _, region = analysed("secco", None, ("a=1/6",))
        assert region.vertices == [(0, 0), (F(1, 2), F(1, 3)), (1, 1)]


# -- 2. bracket algebra ---------------------------------------------------------

def random_curve(rng: random.Random, n: int) -> list[str]:
    """Random polynomial curve t -> R^{n-1} through 0, each component of degree 2..5."""
    out = []
    for _ in range(n - 1):
        deg = rng.randint(2, 5)
        coeffs = [rng.randint(-4, 4) for _ in range(deg - 1)] + [rng.choice([-3, -2, -1, 1, 2, 3])]
        out.append(" + ".join(f"({c})*t^{k}" for k, c in enumerate(coeffs, start=1)))
    return out


def convolution_cases(count: int, seed: int):
    rng = random.Random(seed)
    cases = [["t", "t^2"], ["t", "t^2", "t^3"], ["t", "t^2", "t^3", "t^4"]]
    while len(cases) < count + 3:
        cases.append(random_curve(rng, rng.randint(3, 5)))
    return cases


def check_convolution_rule(curve, cap, sign):
    n = len(curve) + 1
    names = [f"x{i + 1}" for i in range(n - 1)] + ["t"]
    fd = spec_to_fields(OperatorSpec(kind="convolution", n=n, curve=curve))
    table = build_words(fd.X1, fd.X2, cap)
    for w in table.words():
        k = len(w.letters)
        if k >= 2:
            assert table[w] == gamma_derivative_field(curve, names, k).scale(F(sign(w, k))), (curve, str(w))


def test_2_bracket_algebra():
    with criterion("2", "antisymmetry, Jacobi, parity-corrected convolution rule", 30) as notes:
        rng = random.Random(2)
        names = ["x1", "x2", "t"]
        for _ in range(100):
            X, Y, Z = (random_field(rng, names) for _ in range(3))
            assert lie_bracket(X, Y) == -lie_bracket(Y, X)
            jac = (lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X))
                   + lie_bracket(Z, lie_bracket(X, Y)))
            assert jac.is_zero()
        for name, n, params in NUMERIC_PRESETS + [("secco", None, ("a",))]:
            fd = preset_fields(name, n, params)
            A, B = fd.X1, fd.X2
            C = lie_bracket(A, B)
            assert lie_bracket(A, B) == -lie_bracket(B, A)
            assert (lie_bracket(A, lie_bracket(B, C)) + lie_bracket(B, lie_bracket(C, A))
                    + lie_bracket(C, lie_bracket(A, B))).is_zero()
        notes.append("100 random triples + presets")
        for curve in convolution_cases(100, 3):
            check_convolution_rule(curve, 4, lambda w, k: prefix_sign(w) * (-1) ** k)
        notes.append("X_w = s(w) (-1)^k gamma^(k).grad on 103 curves")


@pytest.mark.xfail(strict=True, reason="X_121 = +gamma''' while X_12 = -gamma'': the sign alternates with length")
def test_2_convolution_rule_literal_sign():
    with criterion("2-literal", "convolution rule with a constant sign per prefix", 30):
        for curve in convolution_cases(100, 3):
            check_convolution_rule(curve, 4, lambda w, k: prefix_sign(w))


# -- 3. membership equivalence --------------------------------------------------

MEMBERSHIP_CASES = [
    ("conv-parabola", None, (), 8),
    ("conv-poly", 4, (), 8),
    ("conv-poly", 5, (), 10),
    ("xray", 3, (), 8),
    ("xray", 4, (), 8),
    ("xray", 5, (), 10),
    ("r5-example", None, (), 8),
    ("secco", None, ("a=0",), 8),
    ("secco", None, ("a=1/6",), 8),
    ("commuting", None, (), 4),
]


def test_3_membership_equivalence():
    with criterion("3", "polytope vs region membership, 1000 pairs per preset", 30) as notes:
        total = 0
        for i, case in enumerate(MEMBERSHIP_CASES):
            _, poly, region = analysed(*case)
            for pair in random_pairs(region, 1000, 1000 + i):
                assert poly.membership(c_from_p(pair)) == region.membership(pair.region_point()), (case, str(pair))
                total += 1
        notes.append(f"{total} pairs agree")


# -- 4. flow and bracket consistency --------------------------------------------

def test_4_commutator_defect():
    with criterion("4", "commutator defect vs symbolic X_12 (rel < 5%, decreasing)", 60) as notes:
        worst = 0.0
        for name, n, params in NUMERIC_PRESETS:
            fd, table = preset_table(name, n, params, 3)
            x = [float(v) for v in fd.point]
            want = np.array([float(v) for v in table["12"].evaluate(fd.point)])
            errs = []
            for t in (1e-3, 5e-4):
                got = commutator_defect(fd.X1, fd.X2, x, t, t)
                if not want.any():
                    errs.append(float(np.linalg.norm(got)))
                else:
                    errs.append(float(np.linalg.norm(got - want) / np.linalg.norm(want)))
            if want.any():
                assert errs[0] < 0.05, (name, errs)
            else:
                assert errs[0] < 1e-8, (name, errs)
            # brackets that are exact at second order sit at the rounding floor
            assert errs[1] < errs[0] or errs[1] < 1e-6, (name, errs)
            worst = max(worst, errs[0])
        notes.append(f"worst rel error {worst:.2e}")


# -- 5. ball-volume scaling -----------------------------------------------------

def test_5_ball_volume_scaling():
    with criterion("5", "ball-volume log-log slope within 0.3 of the generator degree", 300) as notes:
        deltas = [2.0 ** -k for k in range(4, 8)]
        for name, n, expected in (("conv-parabola", None, 4), ("xray", 4, 7), ("commuting", None, 2)):
            fd, table = preset_table(name, n, (), 8)
            gens = generators(table, fd.point)
            dominant = min(g.degree.d1 + g.degree.d2 for g in gens)
            assert dominant == expected
            rep = ball_scaling_study(fd.X1, fd.X2, [float(v) for v in fd.point], deltas, samples=200_000)
            assert abs(rep.slope - dominant) <= 0.3, (name, rep.slope)
            notes.append(f"{name} {rep.slope:.3f}")


# -- 6. volume band for the rescaled exponential map ----------------------------

def test_6_phi_volume_band():
    with criterion("6", "|Phi(E)| / (K^-n |Lambda| |E|) in [1/10, 10]", 120) as notes:
        for name, n, params in NUMERIC_PRESETS:
            cap = 10 if (name, n) == ("conv-poly", 5) else 8
            fd, table = preset_table(name, n, params, cap)
            rep = phi_volume_check(table, fd.point, 2 ** -5, 2 ** -5, K=8)
            assert 0.1 <= rep.ratio <= 10, (name, n, params, rep.ratio)
            notes.append(f"{name}{'' if n is None else n}{''.join(params)} {rep.ratio:.2f}")


# -- 7. sharpness probe ---------------------------------------------------------

def test_7_sharpness_probe():
    with criterion("7", "probe increasing outside, spread < 2 inside", 300) as notes:
        fd, table = preset_table("conv-parabola")
        poly = newton_polytope(generators(table, fd.point))
        deltas = [2.0 ** -k for k in range(3, 7)]
        out = sharpness_probe(fd, table, poly, LebesguePair.from_p1_q("4/3", 4), deltas)
        assert out.strictly_increasing(), out.ratios
        inside = sharpness_probe(fd, table, poly, LebesguePair.from_p1_q("3/2", 2), deltas, require_exterior=False)
        assert inside.spread() < 2, inside.ratios
        notes.append(f"exterior ratios {', '.join(f'{r:.4f}' for r in out.ratios)}")
        notes.append(f"interior spread {inside.spread():.3f}")


# -- 8. combinatorics -----------------------------------------------------------

H = F(1, 64)


def super_threshold(coeffs, S: IntervalSet, tau) -> IntervalSet:
    """Independent exact oracle: {t in S : |P(t)| > tau} via sympy root finding."""
    t = sympy.Symbol("t")
    P = sum(sympy.Rational(c.numerator, c.denominator) * t ** i for i, c in enumerate(coeffs))
    tau_s = sympy.Rational(tau.numerator, tau.denominator)
    cuts = set()
    for eq in (P - tau_s, P + tau_s):
        for r in sympy.Poly(eq, t).intervals(eps=sympy.Rational(1, 10 ** 12)):
            cuts.add(F(str((r[0][0] + r[0][1]) / 2)))
    lo, hi = S.intervals[0][0], S.intervals[-1][1]
    pts = sorted({lo, hi} | {c for c in cuts if lo < c < hi})
    keep = []
    for a, b in zip(pts, pts[1:]):
        mid = (a + b) / 2
        if abs(sum(c * mid ** i for i, c in enumerate(coeffs))) > tau:
            keep.append((a, b))
    out = IntervalSet(keep)
    return IntervalSet([iv for a, b in out.intervals for iv in S.intersect(a, b).intervals])


def symmetric_difference(A: IntervalSet, B: IntervalSet):
    return A.subtract(B).measure + B.subtract(A).measure


def test_8_combinatorics():
    with criterion("8", "width oracle, pruning oracle, sheaf centrality and monotonicity", 120) as notes:
        rng = random.Random(8)
        for _ in range(200):
            cells = random_union(rng)
            eps = rng.choice([0.1, 0.25, 0.5, 0.75])
            S = IntervalSet.from_cells(sorted(cells), H)
            got = width_of(S, eps, min_scale=H)
            assert (got.width, got.interval) == brute_width(cells, H, eps, S.sup_abs(), H)
        notes.append("200 unions match")

        w = F(1, 8)
        cell = w / 64
        S = IntervalSet.from_cells(range(-64, 64), cell)
        polys = [([F(0), F(1)], 1), ([-w * w / 4, F(0), F(1)], 0), ([F(0), -w * w / 4, F(0), F(1)], 0),
                 ([F(1, 1000), F(1, 2), F(-3)], 1)]
        for coeffs, m in polys:
            res = prune_polynomial(coeffs, S, w, m)
            want = super_threshold(coeffs, S, res.tau)
            boundary = 2 * (len(res.removed) + 1)
            assert symmetric_difference(res.kept, want) <= boundary * cell, (coeffs, m)
        notes.append(f"{len(polys)} closed-form polynomials")

        fixtures = [GridSet.box([0, 0, 0], [8, 8, L], H) for L in (16, 64)]
        rows = [(i, j, k) for i in range(8) for j in range(8) for k in range(64 if (i + j) % 2 else 32)]
        fixtures.append(GridSet(3, H, np.array(rows)))
        fd = preset_fields("conv-parabola")
        cloud = sample_ball(BallSpec((0.0, 0.0, 0.0), 2 ** -4, 2 ** -4, samples=40000, seed=3), fd.X1, fd.X2)
        ball = GridSet.from_points(cloud.points, F(1, 512))
        reports = [sheaf_refine(g, 2, 0.1, axis=2) for g in fixtures]
        reports.append(sheaf_refine(ball, 2, 0.1, X=fd.X2))
        reports.append(sheaf_refine(ball, 1, 0.1, X=fd.X1))
        omegas = fixtures + [ball, ball]
        for omega, rep in zip(omegas, reports):
            assert rep.refined.issubset(omega)
            assert all(chk.passed for _, _, chk in fiber_central_checks(rep))
        sets = [(Sp.shift(-Sp.intervals[0][0]), F(rep.width_cells))
                for rep in reports[:3] for Sp in rep.fibers.values()]
        const = monotonicity_constant(0.1)
        pairs = 0
        for A, wa in sets:
            for B, wb in sets:
                if A.issubset(B):
                    assert is_central(A, wa, 0.1, min_scale=1).passed and is_central(B, wb, 0.1, min_scale=1).passed
                    assert wa <= const * wb
                    pairs += 1
        notes.append(f"{len(reports)} refinements central, {pairs} nested pairs")


# -- 9. degenerate inputs -------------------------------------------------------

def test_9_degenerate_inputs(capsys):
    with criterion("9", "constant family fails spanning; trivial queries skip the polytope", 5):
        fd = preset_fields("constant-family")
        for cap in (2, 5, 8):
            hc = hormander_check(build_words(fd.X1, fd.X2, cap), fd.point)
            assert not hc.spans
            assert f"total degree <= {cap}" in hc.message
            assert "no non-trivial restricted weak-type estimate" in hc.message
        for p1, q in (("2", "1"), ("3", "3"), ("3/2", "3/2"), ("inf", "1")):
            assert classify_pair(None, None, LebesguePair.from_p1_q(p1, q)) == TRIVIAL
        assert main(["analyze", "--preset", "constant-family", "--query", "2:1"]) == 0
        assert "trivially bounded" in capsys.readouterr().out
        assert main(["analyze", "--preset", "constant-family"]) == 3
