from __future__ import annotations

import random
from fractions import Fraction

import pytest

from curvelp.polyalg import RationalFn, parse_rational
from curvelp.vfcalc import (
    Degree,
    OperatorSpec,
    SpecError,
    VectorField,
    Word,
    build_words,
    hormander_check,
    lambda_I,
    lie_bracket,
    spec_to_fields,
)

from .conftest import PRESETS, gamma_derivative_field, prefix_sign, preset_fields, preset_table, random_field

PARABOLA = ["x1", "x2", "t"]


def vf(exprs, names):
    return VectorField.from_strings(exprs, names)


# -- lie_bracket -------------------------------------------------------------

def test_parabola_bracket():
    X1 = vf(["0", "0", "1"], PARABOLA)
    X2 = vf(["-1", "-2*t", "1"], PARABOLA)
    assert lie_bracket(X1, X2) == vf(["0", "-2", "0"], PARABOLA)
    assert lie_bracket(X1, X1).is_zero()


def test_secco_brackets():
    names = ["x1", "x2", "x3", "t", "a"]
    X12 = VectorField.from_strings(["0", "2", "(6*a+1)*t + x1", "0"], names, 4)
    X2 = VectorField.from_strings(["0", "0", "0", "1"], names, 4)
    assert lie_bracket(X12, X2) == VectorField.from_strings(["0", "0", "-(6*a+1)", "0"], names, 4)


def test_bracket_dimension_mismatch():
    with pytest.raises(ValueError):
        lie_bracket(vf(["1", "0"], ["x", "y"]), vf(["0", "0", "1"], PARABOLA))


def test_antisymmetry_random():
    rng = random.Random(11)
    for _ in range(100):
        X, Y = random_field(rng, PARABOLA), random_field(rng, PARABOLA)
        assert lie_bracket(X, Y) == -lie_bracket(Y, X)


def test_jacobi_random():
    rng = random.Random(12)
    for _ in range(50):
        X, Y, Z = (random_field(rng, PARABOLA) for _ in range(3))
        total = (lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X))
                 + lie_bracket(Z, lie_bracket(X, Y)))
        assert total.is_zero()


def test_bracket_is_commutator_of_derivations():
    rng = random.Random(13)
    for _ in range(20):
        X, Y = random_field(rng, PARABOLA), random_field(rng, PARABOLA)
        f = parse_rational("x1^2*t - 3*x2 + t^3", PARABOLA)
        assert lie_bracket(X, Y).apply(f) == X.apply(Y.apply(f)) - Y.apply(X.apply(f))


@pytest.mark.parametrize("name", PRESETS)
def test_preset_tables_antisymmetric_and_jacobi(name):
    fd, table = preset_table(name, None, (), 5)
    X1, X2 = fd.X1, fd.X2
    assert lie_bracket(X1, X2) == -lie_bracket(X2, X1)
    X12 = table["12"]
    jac = (lie_bracket(X1, lie_bracket(X2, X12)) + lie_bracket(X2, lie_bracket(X12, X1))
           + lie_bracket(X12, lie_bracket(X1, X2)))
    assert jac.is_zero()


# -- build_words -------------------------------------------------------------

def test_cap_one():
    fd = preset_fields("conv-parabola")
    table = build_words(fd.X1, fd.X2, 1)
    assert [str(w) for w in table.words()] == ["1", "2"]
    assert table["1"] == fd.X1 and table["2"] == fd.X2
    with pytest.raises(ValueError):
        build_words(fd.X1, fd.X2, 0)


def test_enumeration_order_and_recursion():
    fd, table = preset_table("r5-example", None, (), 5)
    words = table.words()
    assert words == sorted(words, key=lambda w: w.sort_key())
    assert len(words) == sum(2 ** k for k in range(1, 6))
    for w in words:
        if len(w.letters) > 1:
            parent = Word(w.letters[:-1])
            assert table[w] == lie_bracket(table[parent], table[str(w.letters[-1])])


def test_convolution_closed_form_parity_corrected():
    """X_w = s(w) (-1)^k gamma^(k) . grad_x with s = -1 for prefix 12, +1 for 21, 0 else."""
    curve = ["t", "t^2", "t^3"]
    names = ["x1", "x2", "x3", "t"]
    fd = spec_to_fields(OperatorSpec(kind="convolution", n=4, curve=curve))
    table = build_words(fd.X1, fd.X2, 5)
    for w in table.words():
        k = len(w.letters)
        if k < 2:
            continue
        eps = prefix_sign(w) * (-1) ** k
        assert table[w] == gamma_derivative_field(curve, names, k).scale(Fraction(eps)), str(w)


@pytest.mark.xfail(strict=True, reason="constant sign for every length contradicts X_121 = +gamma''' (sign alternates)")
def test_convolution_closed_form_literal_sign():
    curve = ["t", "t^2", "t^3"]
    names = ["x1", "x2", "x3", "t"]
    fd = spec_to_fields(OperatorSpec(kind="convolution", n=4, curve=curve))
    table = build_words(fd.X1, fd.X2, 5)
    for w in table.words():
        k = len(w.letters)
        if k >= 2:
            assert table[w] == gamma_derivative_field(curve, names, k).scale(Fraction(prefix_sign(w)))


def test_xray_brackets():
    fd, table = preset_table("xray", 4, (), 6)
    names = fd.names
    assert table["12"] == VectorField.from_strings(["1", "2*s", "0", "0"], names)
    assert table["121"] == VectorField.from_strings(["0", "-2", "0", "0"], names)
    for w in table.words():
        tail = w.letters[2:]
        if w.letters[:2] == (1, 2) and tail.count(2) >= 1:
            assert table[w].is_zero(), str(w)


# -- lambda_I and the spanning check ------------------------------------------

def test_lambda_examples():
    fd, table = preset_table("conv-parabola")
    assert lambda_I(table, ["1", "2", "12"], fd.point) == 2
    assert lambda_I(table, ["1", "1", "12"], fd.point) == 0
    fd, table = preset_table("r5-example", None, (), 5)
    vals = {w: table[w].evaluate(fd.point) for w in ["1", "2", "12", "121", "1211"]}
    assert vals["1"] == (-1, 0, 0, 0, 1)
    assert vals["2"] == (0, 0, 0, 0, 1)
    assert vals["12"] == (0, 2, 0, 0, 0)
    assert vals["121"] == (0, 0, -6, 2, 0)
    assert vals["1211"] == (0, 0, 0, 24, 0)
    for w in ["1212", "1221", "1222"]:
        assert table[w].evaluate(fd.point) == (0, 0, 0, 24, 0)
    assert lambda_I(table, ["1", "2", "12", "121", "1211"], fd.point) == -288


def test_lambda_missing_word():
    fd, table = preset_table("conv-parabola", None, (), 2)
    with pytest.raises(KeyError):
        lambda_I(table, ["1", "2", "1212"], fd.point)


def test_lambda_vanishes_on_dependent_tuples():
    fd, table = preset_table("conv-poly", 4, (), 5)
    # X_121 and X_122 are both 6 d/dx3
    assert lambda_I(table, ["1", "2", "121", "122"], fd.point) == 0
    pt = [Fraction(1, 3), Fraction(-2), Fraction(5, 7), Fraction(1, 2)]
    assert lambda_I(table, ["1", "2", "121", "122"], pt) == 0


def test_hormander():
    fd, table = preset_table("conv-parabola")
    hc = hormander_check(table, fd.point)
    assert hc.spans and [str(w) for w in hc.witness[0]] == ["1", "2", "12"]
    assert hc.witness[1] == Degree(2, 2)
    fd, table = preset_table("xray", 4)
    hc = hormander_check(table, fd.point)
    assert [str(w) for w in hc.witness[0]] == ["1", "2", "12", "121"]
    assert hc.witness[1] == Degree(4, 3)


@pytest.mark.parametrize("cap", [1, 3, 8])
def test_constant_family_fails_up_to_cap(cap):
    fd = preset_fields("constant-family")
    assert fd.W is not None and all(w.is_zero() for w in fd.W)
    assert fd.X1 == fd.X2
    table = build_words(fd.X1, fd.X2, cap)
    assert all(table[w].is_zero() for w in table.words() if len(w.letters) > 1)
    hc = hormander_check(table, fd.point)
    assert not hc.spans
    assert f"total degree <= {cap}" in hc.message


# -- spec_to_fields ----------------------------------------------------------

def test_r5_w():
    fd = preset_fields("r5-example")
    names = fd.names
    want = [parse_rational(e, names) for e in ["-1", "-2*t", "-3*t^2", "-4*t^3 - x2 + 2*t^2"]]
    assert fd.W == want
    assert not fd.warnings


def test_secco_w():
    fd = preset_fields("secco")
    names = fd.names
    want = [parse_rational(e, names) for e in ["-1", "-2*t", "-(3*a+1/2)*t^2 + 1/2*x2 - x1*t"]]
    assert fd.W == want
    table = build_words(fd.X1, fd.X2, 3)
    assert table["12"] == VectorField.from_strings(["0", "2", "(6*a+1)*t + x1", "0"], names, 4)
    assert table["121"] == VectorField.from_strings(["0", "0", "1 - 6*a", "0"], names, 4)
    assert table["122"] == VectorField.from_strings(["0", "0", "-(6*a+1)", "0"], names, 4)


def test_convolution_fields():
    fd = preset_fields("conv-parabola")
    assert fd.X1 == vf(["0", "0", "1"], PARABOLA)
    assert fd.X2 == vf(["-1", "-2*t", "1"], PARABOLA)


@pytest.mark.parametrize("gamma", [
    ["x1 + t", "x2 + t^2", "x3 + t^3", "x4 + t^4 + x2*t"],
    ["x1 + t", "x2 + t^2", "x3 + 1/3*t^3 + 1/2*(x1*t^2 - x2*t)"],
    ["x1 + t + x1*t", "x2 + t^2 + x1*t"],
    ["x1 + t*x2^2 + t", "x2 + t*x1"],
])
def test_w_defining_identity(gamma):
    n = len(gamma) + 1
    spec = OperatorSpec(kind="diffeo", n=n, gamma=gamma)
    fd = spec_to_fields(spec)
    names = fd.names
    g = [parse_rational(e, names) for e in gamma]
    for i in range(n - 1):
        row = sum((g[i].diff(j) * fd.W[j] for j in range(n - 1)), RationalFn.zero(len(names)))
        assert (row + g[i].diff(n - 1)).is_zero()


def test_rescaling_warning_and_generators_stable():
    spec = OperatorSpec(kind="diffeo", n=3, gamma=["x1 + t + x1*t", "x2 + t^2"])
    fd = spec_to_fields(spec)
    assert fd.warnings and "rescaled" in fd.warnings[0]
    # unrescaled field W.grad + d/dt spans with the same witness degree
    names = fd.names
    one = RationalFn.const(len(names), 1)
    X1u = VectorField(list(fd.W) + [one], names, 3)
    a = hormander_check(build_words(fd.X1, fd.X2, 6), fd.point)
    b = hormander_check(build_words(X1u, fd.X2, 6), fd.point)
    assert a.witness[1] == b.witness[1]


@pytest.mark.parametrize("spec,msg", [
    (OperatorSpec(kind="diffeo", n=3, gamma=["x1 + 1 + t", "x2"]), "gamma(x,0)"),
    (OperatorSpec(kind="diffeo", n=3, gamma=["x1 + t*x1^2", "x2 + t"],
                  base_point=[Fraction(1), Fraction(0), Fraction(-1, 2)]), "singular"),
    (OperatorSpec(kind="convolution", n=3, curve=["t^2", "t^3"]), "gamma'(0)"),
    (OperatorSpec(kind="convolution", n=3, curve=["t + 1", "t^2"]), "gamma(0)"),
    (OperatorSpec(kind="convolution", n=3, curve=["t"]), "components"),
    (OperatorSpec(kind="raw", n=2, X1=["0", "0"], X2=["1", "0"]), "vanishes"),
    (OperatorSpec(kind="blob", n=2), "unknown"),
])
def test_spec_errors(spec, msg):
    with pytest.raises(SpecError, match=msg.replace("(", r"\(").replace(")", r"\)")):
        spec_to_fields(spec)


def test_parameters_specialize():
    fd = preset_fields("secco", None, ("a=1/6",))
    assert fd.params == ()
    table = build_words(fd.X1, fd.X2, 3)
    assert table["121"].is_zero()
    sym = preset_fields("secco", None, ("a",))
    assert sym.params == ("a",)
