import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mforge.expr import (
    Domain, ParseError, RealDomainError, SingularityError, UnboundSymbolError, UnknownFunctionError,
    add, antiderivative, definite_integral, differentiate, evaluate, evaluate_batch, has_integral,
    is_closed_form, nonvanishing, normalize, parse, power, render, resolve_abs, sample_points, sym,
    table_antiderivative, zero_test,
)
from mforge.expr.nodes import Const
from oracles import central_difference, fd_close, quad_value
import corpus

F1 = "(k*v^2 - a^2)*x/(1 + k*x^2)"


# -- parsing -------------------------------------------------------------------

def test_parse_oscillator_rhs():
    e = parse(F1)
    assert e.free_symbols == {"k", "v", "a", "x"}
    assert evaluate(e, {"x": 0.5, "v": 0.2}, {"k": 1, "a": 1}) == pytest.approx((0.04 - 1) * 0.5 / 1.25)


def test_parse_zero_and_sum():
    assert parse("0") == Const(0)
    assert parse("x^2 + v^2") == add(power(sym("x"), 2), power(sym("v"), 2))


def test_power_is_right_associative_and_unary_minus():
    assert evaluate(parse("2^3^2"), {}) == 512
    assert evaluate(parse("-x^2"), {"x": 3}) == -9
    assert evaluate(parse("1.5e-1*x"), {"x": 2}) == pytest.approx(0.3)


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as exc:
        parse("1 + (x*")
    assert "column" in str(exc.value)
    with pytest.raises(UnknownFunctionError):
        parse("sinh(x)")


def test_render_round_trip_on_catalog():
    for label, e, _, _ in corpus.expressions():
        assert parse(render(e)) == e, label


def test_normalize_idempotent():
    for _, e, _, _ in corpus.expressions():
        once = normalize(e)
        assert normalize(once) == once


# -- differentiation -----------------------------------------------------------

def test_derivative_power_rule():
    e = differentiate(parse("v^2/(2*(1 + k*x^2))"), "v")
    assert zero_test(add(e, -parse("v/(1 + k*x^2)")), Domain({"x": (-1, 1), "v": (-1, 1)}), {"k": 1.3}).is_zero


def test_derivative_against_finite_differences():
    e = differentiate(parse("1/(1 + k*x^2)"), "x")
    # central differences, h = 1e-6, at k = 1.3
    frozen = {-1.2: 0.37825591045481666, 0.3: -0.6251557880254666, 0.9: -0.5551853002050411}
    for x, fd in frozen.items():
        assert fd_close(evaluate(e, {"x": x}, {"k": 1.3}), fd)
    assert zero_test(add(e, parse("2*k*x/(1 + k*x^2)^2")), Domain({"x": (-2, 2)}), {"k": 1.3}).is_zero


def test_derivative_of_parameter_is_zero():
    assert differentiate(parse("a^2"), "x") == Const(0)


def test_abs_derivative_is_sign_with_sign_zero():
    d = differentiate(parse("abs(x)"), "x")
    assert evaluate(d, {"x": 0.0}) == 0.0
    assert evaluate(d, {"x": -2.0}) == -1.0


def test_catalog_derivatives_match_finite_differences():
    for label, e, d, params in corpus.expressions():
        names = [n for n in d.names if e.has(n)]
        pts = sample_points(d, 32, seed=11)
        for name in names:
            de = differentiate(e, name)
            for p in pts:
                def f(**kw):
                    return evaluate(e, kw, params)
                try:
                    exact = evaluate(de, p, params)
                    approx = central_difference(f, p, name)
                except SingularityError:
                    continue
                assert fd_close(exact, approx, scale=1e-3), (label, name, p)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 3), st.integers(1, 4))
def test_chain_rule_property(x, k, n):
    e = parse(f"atan(sqrt(k)*x)^{n} + exp(-k*x^2)*sin(x)")
    de = differentiate(e, "x")
    fd = central_difference(lambda x: evaluate(e, {"x": x}, {"k": k}), {"x": x}, "x")
    assert fd_close(evaluate(de, {"x": x}, {"k": k}), fd, rtol=1e-6, scale=1e-2)


# -- evaluation ----------------------------------------------------------------

def test_evaluate_examples():
    assert evaluate(parse("(1 + k*x^2)/(k*v^2 - a^2)"), {"x": 0, "v": 0}, {"k": 1, "a": 1}) == -1
    assert evaluate(parse("1/(1 + k*x^2)"), {"x": 1}, {"k": 1}) == 0.5


def test_evaluate_errors():
    with pytest.raises(RealDomainError):
        evaluate(parse("atanh(u)"), {"u": 1.5})
    with pytest.raises(SingularityError) as exc:
        evaluate(parse("1/x + 1"), {"x": 0})
    assert exc.value.subexpr == parse("1/x")
    with pytest.raises(UnboundSymbolError):
        evaluate(parse("x + y"), {"x": 1})


def test_evaluate_batch_flags_singular_entries():
    r = evaluate_batch(parse("1/x"), {"x": np.array([0.0, 2.0])})
    assert list(r.ok) == [False, True]
    assert r.values[1] == 0.5


# -- zero test -----------------------------------------------------------------

def test_zero_test_multiplier_condition():
    mu = parse("1/(1 + k*x^2)")
    F = parse(F1)
    e = add(sym("v") * differentiate(mu, "x"), differentiate(mu * F, "v"))
    v = zero_test(e, Domain({"x": (-2, 2), "v": (-2, 2)}), {"k": 1, "a": 1})
    assert v.is_zero


def test_zero_test_trivial_cases():
    assert zero_test(parse("x - x"), Domain({"x": (0, 1)})).is_zero
    v = zero_test(parse("x*v"), Domain({"x": (1, 2), "v": (1, 2)}))
    assert v.is_nonzero
    assert 1 <= v.witness["x"] <= 2
    assert zero_test(parse("1"), Domain({"x": (0, 1)})).is_nonzero


def test_zero_test_skips_singular_draws():
    e = parse("x/x - 1")
    assert zero_test(e, Domain({"x": (-1, 1)})).is_zero


def test_zero_test_is_deterministic_for_a_seed():
    e = parse("x*v - 1e-3")
    d = Domain({"x": (-1, 1), "v": (-1, 1)})
    assert zero_test(e, d, seed=3) == zero_test(e, d, seed=3)


def test_zero_test_self_difference_on_catalog():
    for label, e, d, params in corpus.expressions():
        assert zero_test(add(e, -e), d, params).is_zero, label


def test_nonvanishing_certificate():
    d = Domain({"v": (-0.9, 0.9)})
    c = nonvanishing(parse("v^2 - 1"), d)
    assert c.holds and c.sign == -1
    c = nonvanishing(parse("v"), d)
    assert not c.holds and c.witness is not None


def test_resolve_abs():
    e = resolve_abs(parse("ln(abs(v))"), Domain({"v": (0.1, 2)}))
    assert e == parse("ln(v)")
    e = resolve_abs(parse("abs(v)"), Domain({"v": (-2, -0.1)}))
    assert e == parse("-v")
    assert resolve_abs(parse("abs(v)"), Domain({"v": (-1, 1)})) == parse("abs(v)")


# -- integration ---------------------------------------------------------------

def _diff_back(e, var, params, d):
    F = table_antiderivative(e, var, params)
    assert F is not None
    return zero_test(add(differentiate(F, var), -e), d, params)


def test_atan_branch():
    F = antiderivative(parse("1/(1 + k*z^2)"), "z", {"k": 2.0})
    assert F == parse("atan(sqrt(k)*z)/sqrt(k)")
    assert zero_test(add(differentiate(F, "z"), -parse("1/(1 + k*z^2)")), Domain({"z": (-3, 3)}), {"k": 2.0}).is_zero


def test_atanh_branch():
    e = parse("1/(1 - k*z^2)")
    assert _diff_back(e, "z", {"k": 2.0}, Domain({"z": (-0.6, 0.6)})).is_zero


def test_phi2_quadrature_closed_form():
    P = {"k": 1.0, "a": 1.0}
    F = definite_integral(parse("-a^2*z/(1 + k*z^2)^2"), "z", 0, sym("x"), P)
    assert is_closed_form(F)
    target = parse("-a^2*x^2/(2*(1 + k*x^2))")
    d = Domain({"x": (-2, 2)})
    diff = add(F, -target)
    assert zero_test(differentiate(diff, "x"), d, P).is_zero
    assert abs(evaluate(diff, {"x": 0.0}, P)) < 1e-14


def test_integral_of_zero():
    assert antiderivative(Const(0), "z") == Const(0)


def test_numeric_fallback_matches_quad():
    F = antiderivative(parse("exp(-z^2)"), "z")
    assert has_integral(F)
    for z in (0.3, 1.0, 2.5):
        assert evaluate(F, {"z": z}) == pytest.approx(quad_value(lambda t: math.exp(-t * t), 0, z), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=4), st.floats(0.2, 3), st.booleans())
def test_rational_quadratic_differentiates_back(coeffs, k, minus):
    num = " + ".join(f"({c})*z^{i}" for i, c in enumerate(coeffs))
    den = f"(1 {'-' if minus else '+'} k*z^2)"
    e = parse(f"({num})/{den}")
    zmax = 0.9 / math.sqrt(k) if minus else 2.0
    F = table_antiderivative(e, "z", {"k": k})
    if F is None:
        return
    assert zero_test(add(differentiate(F, "z"), -e), Domain({"z": (-zmax, zmax)}), {"k": k}).is_zero


def test_sample_points():
    d = Domain({"x": (-2, 2)})
    pts = sample_points(d, 64, seed=5)
    assert all(-2 <= p["x"] <= 2 for p in pts)
    assert pts == sample_points(d, 64, seed=5)
    assert sample_points(Domain({"x": (0.5, 0.5)}), 1) == [{"x": 0.5}]


def test_domain_rejects_empty_interval():
    with pytest.raises(ValueError):
        Domain({"x": (1, 0)})
