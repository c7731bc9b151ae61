import pytest
from hypothesis import given, settings, strategies as st

from mforge import catalog
from mforge.expr import Domain, UnboundSymbolError, add, differentiate, mul, parse, sym, zero_test
from mforge.geometry import (
    CoordinateMismatch, PointSymmetryAnsatz, Sode, VectorField, divergence, jet_name, lie_bracket,
    prolong, sode_to_field, total_derivative,
)
from mforge.nonlocal_symmetry import extend

P = {"k": 1.0, "a": 1.0}
D = Domain({"x": (-0.9, 0.9), "v": (-0.9, 0.9)})
XV = ("x", "v")


def osc1():
    return catalog.oscillator_one_system(1.0, 1.0)


def osc2():
    return catalog.oscillator_two_system(1.0, 1.0)


def same(e1, e2, d=D, params=P):
    return zero_test(add(e1, -e2), d, params).is_zero


def test_sode_rejects_foreign_symbols():
    with pytest.raises(ValueError):
        Sode("bad", parse("x*q"), {})


def test_sode_to_field_components():
    X = sode_to_field(osc1())
    assert X.coords == XV
    assert X["x"] == sym("v")
    assert same(X["v"], parse("x*(k*v^2 - a^2)/(1 + k*x^2)"))
    X = sode_to_field(osc2())
    assert same(X["v"], parse("-k*x*v^2/(1 + k*x^2) - a^2*x/(1 + k*x^2)^3"))
    h = sode_to_field(catalog.harmonic_system(1.0))
    assert h["v"] == parse("-a^2*x")
    Xt = sode_to_field(osc1(), with_time=True)
    assert Xt.coords == ("t", "x", "v") and Xt["t"] == parse("1")


def test_divergence_examples():
    assert same(divergence(sode_to_field(osc1())), parse("2*k*x*v/(1 + k*x^2)"))
    assert same(divergence(sode_to_field(osc2())), parse("-2*k*x*v/(1 + k*x^2)"))
    assert divergence(sode_to_field(catalog.harmonic_system(1.0))) == parse("0")
    with pytest.raises(CoordinateMismatch):
        divergence(sode_to_field(osc1(), with_time=True))


def test_bracket_examples():
    dx = VectorField(("x",), (parse("1"),))
    xdx = VectorField(("x",), (parse("x"),))
    assert lie_bracket(dx, xdx).components == (parse("1"),)
    X = sode_to_field(osc1())
    assert lie_bracket(X, X).is_zero()
    with pytest.raises(CoordinateMismatch):
        lie_bracket(dx, X)


FIELDS = [
    ("v", "x*(k*v^2 - a^2)/(1 + k*x^2)"),
    ("x*v", "sin(x) + v^2"),
    ("exp(v)", "x"),
    ("1 + x^2", "v/(2 + x)"),
]
SCALARS = ["x^2*v", "exp(x - v)", "atan(x*v)", "1/(3 + x)", "v^3 - x"]


def field(i):
    a, b = FIELDS[i]
    return VectorField(XV, (parse(a), parse(b)))


def test_jacobi_identity():
    for i in range(len(FIELDS)):
        for j in range(len(FIELDS)):
            for m in range(len(FIELDS)):
                X, Y, Z = field(i), field(j), field(m)
                J = (lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X))
                     + lie_bracket(Z, lie_bracket(X, Y)))
                assert all(v.is_zero for v in J.zero_verdicts(D, P).values())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_bracket_bilinear_and_antisymmetric(i, j, m, c1, c2):
    X, Y, Z = field(i), field(j), field(m)
    lhs = lie_bracket(X.scaled(parse(repr(c1))) + Y.scaled(parse(repr(c2))), Z)
    rhs = lie_bracket(X, Z).scaled(parse(repr(c1))) + lie_bracket(Y, Z).scaled(parse(repr(c2)))
    assert all(v.is_zero for v in (lhs - rhs).zero_verdicts(D, P).values())
    anti = lie_bracket(X, Y) + lie_bracket(Y, X)
    assert all(v.is_zero for v in anti.zero_verdicts(D, P).values())


@pytest.mark.parametrize("f", SCALARS)
@pytest.mark.parametrize("s", ["osc1", "osc2"])
def test_divergence_product_rule(f, s):
    X = sode_to_field(osc1() if s == "osc1" else osc2())
    f = parse(f)
    lhs = divergence(X.scaled(f))
    rhs = add(X(f), mul(f, divergence(X)))
    assert same(lhs, rhs)


def test_total_derivative_examples():
    s = osc1()
    I = parse("(1 + k*x^2)/(k*v^2 - a^2)")
    assert zero_test(total_derivative(I, s), D, P).is_zero
    assert total_derivative(parse("t"), s) == parse("1")
    es = extend(s, parse("1/v"), s.domain.with_interval("v", 0.1, 0.9))
    assert same(total_derivative(parse("w"), es), mul(s.F, parse("1/v")), es.domain)
    with pytest.raises(UnboundSymbolError):
        total_derivative(parse("q"), s)


@pytest.mark.parametrize("e1,e2", [("x*v", "exp(x)"), ("atan(v)", "x^2 + t"), ("1/(2 + x)", "v^3")])
def test_total_derivative_is_a_derivation(e1, e2):
    s = osc1()
    a, b = parse(e1), parse(e2)
    lhs = total_derivative(mul(a, b), s)
    rhs = add(mul(total_derivative(a, s), b), mul(a, total_derivative(b, s)))
    assert same(lhs, rhs, D.with_interval("t", 0, 1))


def test_prolong_time_translation():
    A = PointSymmetryAnsatz(parse("1"), [("x", parse("0"))])
    for order in (1, 2, 3):
        Y = prolong(A, order)
        assert Y["t"] == parse("1")
        assert all(c == parse("0") for q, c in Y.as_dict().items() if q != "t")


def test_prolong_scaling_one_step():
    A = PointSymmetryAnsatz(parse("0"), [("x", parse("x"))])
    Y = prolong(A, 1)
    assert Y["x"] == parse("x")
    assert Y[jet_name("x", 1)] == sym(jet_name("x", 1))


def test_prolong_projects_to_lower_order():
    A = PointSymmetryAnsatz(parse("t*x"), [("x", parse("x^2 + t")), ("w", parse("exp(x)*w"))])
    Y2, Y3 = prolong(A, 2), prolong(A, 3)
    for q in Y2.coords:
        assert Y3[q] == Y2[q]


def test_prolong_second_order_formula():
    # x -> x + eps*t: phi_1 = 1, phi_2 = 0
    A = PointSymmetryAnsatz(parse("0"), [("x", parse("t"))])
    Y = prolong(A, 2)
    assert Y["x_1"] == parse("1") and Y["x_2"] == parse("0")
    # t -> t + eps*t: phi_1 = -x_1, phi_2 = -2 x_2
    A = PointSymmetryAnsatz(parse("t"), [("x", parse("0"))])
    Y = prolong(A, 2)
    assert Y["x_1"] == parse("-x_1") and Y["x_2"] == parse("-2*x_2")


def test_ansatz_rejects_jet_coordinates():
    with pytest.raises(ValueError):
        PointSymmetryAnsatz(parse("x_1"), [("x", parse("0"))])


def test_vector_field_application():
    X = VectorField(XV, (parse("v"), parse("-x")))
    assert X(parse("x^2 + v^2")) == parse("0")
    assert same(differentiate(X(parse("x*v")), "x"), parse("-2*x"))
