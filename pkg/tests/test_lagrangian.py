import numpy as np
import pytest

from mforge import catalog
from mforge.dynamics import IntegratorConfig, conservation_drift, integrate
from mforge.expr import Domain, add, differentiate, evaluate, evaluate_batch, has_integral, parse, zero_test
from mforge.lagrangian import (
    LegendreError, catalog_lagrangian, euler_lagrange_residual, hamiltonian_identity, hessian,
    isolate, lagrangian_from_integral, lagrangian_from_multiplier, legendre, newton_inverse,
)
from mforge.multiplier import check_integral, check_multiplier
import corpus

P = {"k": 1.0, "a": 1.0}


def osc1(k=1.0, a=1.0):
    return catalog.oscillator_one_system(k, a)


def osc2(k=1.0, a=1.0):
    return catalog.oscillator_two_system(k, a)


def up_to_constant(e1, e2, d, params=P):
    diff = add(e1, -e2)
    return all(zero_test(differentiate(diff, q), d, params).is_zero for q in d.names)


def test_mechanical_lagrangian_of_oscillator_one():
    s = osc1()
    L = lagrangian_from_multiplier(s, check_multiplier(s, "1/(1 + k*x^2)"))
    assert L.verified and not L.numeric
    assert up_to_constant(L.L, parse("(v^2 - a^2*x^2)/(2*(1 + k*x^2))"), s.domain)


def test_mechanical_lagrangian_of_oscillator_two():
    s = osc2()
    L = lagrangian_from_multiplier(s, check_multiplier(s, "1 + k*x^2"))
    assert L.verified
    assert up_to_constant(L.L, parse("(1 + k*x^2)*v^2/2 - a^2*x^2/(2*(1 + k*x^2))"), s.domain)


def test_non_mechanical_lagrangian_of_oscillator_one():
    s = osc1()
    L = lagrangian_from_multiplier(s, check_multiplier(s, "1/(k*v^2 - a^2)"))
    assert L.verified
    assert zero_test(add(hessian(L), -parse("1/(k*v^2 - a^2)")), s.domain, P).is_zero
    assert zero_test(euler_lagrange_residual(s, L), s.domain, P).is_zero
    ref = parse("-v/(sqrt(k)*a)*atanh(sqrt(k)*v/a) + ln((1 + k*x^2)/abs(a^2 - k*v^2))/(2*k)")
    assert zero_test(euler_lagrange_residual(s, ref), s.domain, P).is_zero
    assert up_to_constant(L.L, ref, s.domain)


def test_gauge_choice_phi2_vanishes_at_origin():
    s = osc1()
    L = lagrangian_from_multiplier(s, check_multiplier(s, "1/(1 + k*x^2)"))
    assert abs(evaluate_batch(L.phi2, {**P, "x": np.array([0.0])}).values[0]) < 1e-15


def test_lagrangian_from_integral_matches_l1_up_to_constant():
    s = osc1()
    I = check_integral(s, "(k*v^2 - a^2)/(2*k*(1 + k*x^2))")
    L = lagrangian_from_integral(s, I)
    assert L.el_verdict.is_zero
    assert up_to_constant(L.L, parse("(v^2 - a^2*x^2)/(2*(1 + k*x^2))"), s.domain)
    assert zero_test(add(L.L, -parse("(k*v^2 + a^2)/(2*k*(1 + k*x^2))")), s.domain, P).is_zero


def test_lagrangian_from_harmonic_energy():
    s = catalog.harmonic_system(1.0)
    L = lagrangian_from_integral(s, check_integral(s, "(x^2 + v^2)/2"))
    assert L.el_verdict.is_zero and L.regular.holds
    assert up_to_constant(L.L, parse("(v^2 - x^2)/2"), s.domain, s.params)


def test_constant_integral_gives_a_degenerate_lagrangian():
    s = catalog.harmonic_system(1.0)
    L = lagrangian_from_integral(s, parse("3"))
    assert L.L == parse("-3")
    assert not L.regular.holds


def test_numeric_double_integral_fallback():
    s = catalog.harmonic_system(1.0)
    d = Domain({"x": (-1, 1), "v": (-1, 1)})
    L = lagrangian_from_multiplier(s, parse("exp(x^2 + v^2)"), domain=d)
    assert L.numeric and has_integral(L.L)
    assert L.verified and L.tol == 1e-6


def test_euler_lagrange_residual_examples():
    s = osc1()
    assert zero_test(euler_lagrange_residual(s, parse("(v^2 - a^2*x^2)/(2*(1 + k*x^2))")), s.domain, P).is_zero
    s2 = osc2()
    ref = parse("(1 + k*x^2)*v^2/2 - a^2*x^2/(2*(1 + k*x^2))")
    assert zero_test(euler_lagrange_residual(s2, ref), s2.domain, P).is_zero
    v = zero_test(euler_lagrange_residual(s, parse("v^2/2")), s.domain, P)
    assert v.is_nonzero and v.witness


def test_hamiltonians_h1():
    for s, mu, ref in [
        (osc1(), "1/(1 + k*x^2)", "(1 + k*x^2)*p^2/2 + a^2*x^2/(2*(1 + k*x^2))"),
        (osc2(), "1 + k*x^2", "p^2/(2*(1 + k*x^2)) + a^2*x^2/(2*(1 + k*x^2))"),
    ]:
        H = legendre(lagrangian_from_multiplier(s, mu))
        assert H.symbolic and H.round_trip_error <= 1e-10 and H.identity_error <= 1e-9
        Hd = Domain({"x": s.domain["x"], "p": H.p_domain})
        assert up_to_constant(H.H, parse(ref), Hd)
        assert zero_test(hamiltonian_identity(H), s.domain, P).is_zero


def test_harmonic_hamiltonian():
    s = catalog.harmonic_system(1.0)
    H = legendre(catalog_lagrangian(s, "(v^2 - x^2)/2"))
    assert zero_test(add(H.H, -parse("(p^2 + x^2)/2")), Domain({"x": (-1, 1), "p": (-1, 1)})).is_zero


def test_non_mechanical_hamiltonians_round_trip():
    e1 = catalog.oscillator_one(1.0, 1.0)
    H = e1.hamiltonians["H2"]
    assert H.round_trip_error <= 1e-10 and H.identity_error <= 1e-9
    e2 = catalog.oscillator_two(1.0, 1.0)
    H = e2.hamiltonians["H2"]
    assert not H.symbolic
    assert H.converged and H.round_trip_error <= 1e-10 and H.identity_error <= 1e-9


def test_legendre_rejects_irregular_lagrangian():
    s = catalog.harmonic_system(1.0)
    with pytest.raises(LegendreError):
        legendre(catalog_lagrangian(s, "v^3/6 - x^2/2"))


def test_isolate_inverse_functions():
    assert isolate(parse("atanh(2*v)"), parse("p"), "v") == parse("tanh(p)/2")
    cube = isolate(parse("v^3 + 1"), parse("p"), "v")
    for p in (-7.0, 0.5, 9.0):
        assert evaluate(cube, {"p": p}) == pytest.approx(np.cbrt(p - 1), rel=1e-14)
    assert isolate(parse("3*v + x"), parse("p"), "v") == parse("(p - x)/3")
    assert isolate(parse("v*exp(v)"), parse("p"), "v") is None


def test_newton_inverse_brackets_and_converges():
    p_expr = parse("v^3 + v")
    v_true = np.linspace(-1.5, 1.5, 11)
    p = v_true ** 3 + v_true
    v, ok = newton_inverse(p_expr, np.zeros_like(p), p, (-2.0, 2.0), {})
    assert ok.all()
    assert np.max(np.abs(v - v_true)) < 1e-12


def test_every_catalog_lagrangian_reproduces_its_multiplier():
    for e in corpus.entries():
        for name, L in e.lagrangians.items():
            assert L.el_verdict.is_zero, (e.name, name)
            if L.multiplier is not None:
                assert L.hessian_verdict.is_zero, (e.name, name)


def test_alternative_lagrangians_both_satisfy_euler_lagrange():
    e = catalog.oscillator_one(1.0, 1.0)
    L1, L2 = e.lagrangians["L1"], e.lagrangians["L2"]
    assert zero_test(add(hessian(L1), -hessian(L2)), e.sode.domain, P).is_nonzero
    for L in (L1, L2):
        assert zero_test(euler_lagrange_residual(e.sode, L), e.sode.domain, P).is_zero


@pytest.mark.parametrize("name", ["L1", "L2"])
def test_energy_is_conserved_along_trajectories(name):
    e = catalog.oscillator_one(1.0, 1.0)
    L = e.lagrangians[name]
    traj = integrate(e.sode, [0.5, 0.0], IntegratorConfig(t_end=5.0, step=1e-3))
    drift, _ = conservation_drift(traj, L.energy(), P)
    assert drift < 1e-10
