import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorhol.exprdsl import (
    Const, Coord, DomainError, Fn, Mul, Param, ParseError, Pow,
    UnknownIdentifierError, add, compile_exprs, differentiate, eval_expr,
    fn, free_symbols, mul, neg, parse_expr, pow_, sub, to_string,
)

COORDS = ("u", "v", "x", "y")
PARAMS = ("b0", "f0", "kappa", "xi")


def p(src, params=PARAMS):
    return parse_expr(src, COORDS, params)


def ev(expr, point, **env):
    return eval_expr(expr, point, COORDS, env)


class TestParse:
    def test_product_of_param_and_sqrt(self):
        e = p("b0*sqrt(v)")
        assert isinstance(e, Mul)
        assert e.lhs == Param("b0")
        assert e.rhs == Pow(Coord("v"), Fraction(1, 2))

    def test_power_exp_tree(self):
        e = p("u^2*exp(f0*x*y)")
        assert isinstance(e, Mul)
        assert e.lhs == Pow(Coord("u"), Fraction(2))
        assert isinstance(e.rhs, Fn) and e.rhs.name == "exp"

    def test_syntax_error_offset(self):
        with pytest.raises(ParseError) as exc:
            p("u +")
        assert exc.value.offset == 3

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError):
            p("u*q")

    def test_unknown_identifier_offset(self):
        with pytest.raises(ParseError) as exc:
            p("u + zoom")
        assert exc.value.offset == 4

    def test_unexpected_character(self):
        with pytest.raises(ParseError):
            p("u @ v")

    def test_function_requires_parens(self):
        with pytest.raises(ParseError):
            p("sqrt v")

    def test_exponent_must_be_rational(self):
        with pytest.raises(ParseError):
            p("u^v")

    def test_rational_exponent_forms(self):
        assert p("v^(1/2)") == Pow(Coord("v"), Fraction(1, 2))
        assert p("v^-2") == Pow(Coord("v"), Fraction(-2))
        assert p("v^2.5") == Pow(Coord("v"), Fraction(5, 2))

    def test_power_right_associative(self):
        assert p("u^2^3") == Pow(Coord("u"), Fraction(8))

    def test_constant_folding(self):
        assert p("2*3 + 1") == Const(Fraction(7))
        assert p("u*1") == Coord("u")
        assert p("u + 0") == Coord("u")
        assert p("u^0") == Const(Fraction(1))
        assert p("1/2") == Const(Fraction(1, 2))
        assert p("1e-3") == Const(Fraction(1, 1000))


class TestDifferentiate:
    def test_power_rule(self):
        e = differentiate(p("u^2"), "u")
        assert ev(e, (3.0, 1.0, 0.0, 0.0)) == pytest.approx(6.0)

    def test_chain_rule_sqrt(self):
        e = differentiate(p("b0*sqrt(v)"), "v")
        got = ev(e, (0.0, 4.0, 0.0, 0.0), b0=3.0)
        assert got == pytest.approx(3.0 / (2.0 * 2.0))

    def test_chain_rule_exp(self):
        e = differentiate(p("exp(x*y)"), "x")
        got = ev(e, (0.0, 0.0, 2.0, 5.0))
        assert got == pytest.approx(5.0 * math.exp(10.0))

    def test_other_coordinate_is_zero(self):
        assert differentiate(p("u^2"), "x") == Const(Fraction(0))


class TestEval:
    def test_arithmetic(self):
        assert ev(p("2*u*v"), (1.0, 3.0, 0.0, 0.0)) == pytest.approx(6.0)

    def test_sqrt_domain_violation(self):
        with pytest.raises(DomainError) as exc:
            ev(p("sqrt(v)"), (0.0, -1.0, 0.0, 0.0))
        assert "sqrt(v)" in str(exc.value)

    def test_appendix_conformal_factor(self):
        e = p("kappa^4*(1 + xi*u)^-2")
        got = ev(e, (0.0, 1.0, 0.0, 0.0), kappa=1.0, xi=0.5)
        assert got == pytest.approx(1.0)

    def test_division_by_zero(self):
        with pytest.raises(DomainError):
            ev(p("u/v"), (1.0, 0.0, 0.0, 0.0))

    def test_ln_domain(self):
        with pytest.raises(DomainError):
            ev(p("ln(u)"), (-2.0, 0.0, 0.0, 0.0))


# --- random expression machinery -------------------------------------------

def _leaf():
    return st.one_of(
        st.integers(min_value=-4, max_value=4).map(lambda n: Const(Fraction(n))),
        st.sampled_from([Const(Fraction(1, 2)), Const(Fraction(3, 4))]),
        st.sampled_from([Coord(c) for c in COORDS]),
        st.sampled_from([Param("b0"), Param("f0")]),
    )


def _extend(children):
    # Build through the smart constructors: the canonical-form guarantees
    # only cover trees that went through constant folding.
    exponents = st.sampled_from(
        [Fraction(2), Fraction(3), Fraction(-1), Fraction(1, 2), Fraction(3, 2)])
    return st.one_of(
        st.tuples(children, children).map(lambda t: add(*t)),
        st.tuples(children, children).map(lambda t: sub(*t)),
        st.tuples(children, children).map(lambda t: mul(*t)),
        st.tuples(children, exponents).map(lambda t: pow_(t[0], t[1])),
        children.map(neg),
        children.map(lambda e: fn("exp", e)),
        children.map(lambda e: fn("sin", e)),
        children.map(lambda e: fn("cos", e)),
    )


EXPRS = st.recursive(_leaf(), _extend, max_leaves=12)
POINTS = st.tuples(*[st.floats(min_value=0.3, max_value=1.7) for _ in range(4)])
ENV = {"b0": 0.7, "f0": -0.4}


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(EXPRS, POINTS)
def test_symbolic_derivative_matches_finite_difference(expr, point):
    var = "u"
    h = 1e-6

    def value(shift):
        pt = (point[0] + shift,) + point[1:]
        return eval_expr(expr, pt, COORDS, ENV)

    try:
        f_plus, f_minus = value(h), value(-h)
        sym = eval_expr(differentiate(expr, var), point, COORDS, ENV)
    except DomainError:
        return  # point fell outside the expression's domain
    fd = (f_plus - f_minus) / (2 * h)
    scale = max(1.0, abs(sym), abs(fd))
    if scale > 1e12:
        return  # FD step underflows at these magnitudes
    assert sym == pytest.approx(fd, rel=2e-5, abs=2e-5 * scale)


@settings(max_examples=250, deadline=None, derandomize=True)
@given(EXPRS)
def test_print_parse_print_fixed_point(expr):
    s1 = to_string(expr)
    back = parse_expr(s1, COORDS, PARAMS)
    assert to_string(back) == s1


@settings(max_examples=100, deadline=None, derandomize=True)
@given(EXPRS, POINTS)
def test_reparse_preserves_value(expr, point):
    back = parse_expr(to_string(expr), COORDS, PARAMS)
    try:
        v1 = eval_expr(expr, point, COORDS, ENV)
    except DomainError:
        return
    v2 = eval_expr(back, point, COORDS, ENV)
    assert v2 == pytest.approx(v1, rel=1e-12, abs=1e-12)


@settings(max_examples=80, deadline=None, derandomize=True)
@given(EXPRS, POINTS)
def test_compiled_eval_matches_reference(expr, point):
    try:
        ref = eval_expr(expr, point, COORDS, ENV)
    except DomainError:
        return
    f = compile_exprs([expr], COORDS, ENV)
    got = f(np.array([point]))[0, 0]
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_compiled_eval_batches():
    e = p("u^2 + b0*v")
    f = compile_exprs([e, differentiate(e, "u")], COORDS, {"b0": 2.0})
    pts = np.array([[1.0, 2.0, 0, 0], [3.0, 1.0, 0, 0]])
    out = f(pts)
    np.testing.assert_allclose(out, [[5.0, 11.0], [2.0, 6.0]])


def test_free_symbols():
    cs, ps = free_symbols(p("b0*sqrt(v) + u*cos(x)"))
    assert cs == {"v", "u", "x"}
    assert ps == {"b0"}
