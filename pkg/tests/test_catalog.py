import json

import pytest

from mforge import catalog
from mforge.catalog import UNVERIFIED
from mforge.expr import Domain, add, evaluate, parse, zero_test
from mforge.lagrangian import hessian, lagrangian_from_multiplier
import corpus
from oracles import PHI2_TABLE


@pytest.mark.parametrize("k,a", corpus.PARAMS)
def test_oscillators_self_certify(k, a):
    for e in (catalog.oscillator_one(k, a), catalog.oscillator_two(k, a)):
        assert e.certified, e.checks()


def test_oscillator_one_artifacts():
    e = catalog.oscillator_one(1.0, 1.0)
    assert set(e.multipliers) == {"mu1", "mu2"}
    assert {"L1", "L2", "L_integral"} <= set(e.lagrangians)
    assert {"H1", "H2"} <= set(e.hamiltonians)
    assert e.references["L1"].status in ("verified", "verified-up-to-constant")
    assert e.references["L2"].status in ("verified", "verified-up-to-constant")
    assert e.references["H1"].status in ("verified", "verified-up-to-constant")
    assert e.references["H2"].flagged
    assert e.sode.domain["v"][1] == pytest.approx(0.99)


def test_oscillator_one_at_k_zero_is_harmonic():
    e = catalog.oscillator_one(0.0, 1.0)
    assert e.certified
    assert zero_test(add(e.multipliers["mu1"].expr, -parse("1")), e.sode.domain, e.params).is_zero
    assert "L2" not in e.lagrangians


def test_oscillator_one_negative_k_restricts_x():
    e = catalog.oscillator_one(-0.25, 1.0)
    assert e.sode.domain["x"] == pytest.approx((-1.98, 1.98))
    assert e.certified


def test_oscillator_two_artifacts():
    e = catalog.oscillator_two(1.0, 1.0)
    assert e.certified
    assert e.references["L1"].status in ("verified", "verified-up-to-constant")
    assert e.references["H1"].status in ("verified", "verified-up-to-constant")
    assert e.references["phi2_bar"].status == "verified"
    for key in ("phi2_bar_quoted", "H2"):
        assert e.references[key].status == UNVERIFIED
    assert "mismatch" in e.references["phi2_bar_quoted"].note
    assert not e.hamiltonians["H2"].symbolic


def test_oscillator_two_rejects_k_zero():
    with pytest.raises(ValueError, match="harmonic"):
        catalog.oscillator_two(0.0, 1.0)


def test_oscillator_two_without_force_term():
    e = catalog.oscillator_two(1.0, 0.0)
    assert e.certified
    I = e.integrals["I"]
    assert I.ok
    d = e.sode.domain
    assert zero_test(add(I.expr, -parse("k*(1 + k*x^2)^2*v^2/(1 + k*x^2)")), d, e.params).is_zero


def test_phi2_bar_against_quadrature():
    for k, a, x, value in PHI2_TABLE:
        e = catalog.oscillator_two(k, a, certify=False)
        assert abs(evaluate(e.lagrangians["L2"].phi2, {"x": x}, e.params) - value) < 1e-10


@pytest.mark.parametrize("a", [1.0, 0.0, 2.0])
def test_harmonic_entries(a):
    e = catalog.harmonic(a)
    assert e.certified
    I = e.integrals["I"].expr
    assert I == (parse("v") if a == 0 else parse("a^2*x^2 + v^2"))
    if a == 1:
        assert zero_test(add(I, -parse("x^2 + v^2")), e.sode.domain, e.params).is_zero


def test_harmonic_lagrangian_reference():
    e = catalog.harmonic(1.0)
    assert e.references["L"].status in ("verified", "verified-up-to-constant")


def test_cross_construction_consistency():
    for e in corpus.entries():
        if "L1" not in e.lagrangians:
            continue
        s = e.sode
        again = lagrangian_from_multiplier(s, e.multipliers["mu1"])
        assert zero_test(add(hessian(again), -hessian(e.lagrangians["L1"])), s.domain, e.params).is_zero


def test_lookup_by_name():
    assert catalog.get("oscillator1").name == "oscillator1"
    assert catalog.get("harmonic", alpha=2.0).params == {"a": 2.0}
    assert catalog.system("oscillator2", 2.0, 0.5).params == {"k": 2.0, "a": 0.5}
    with pytest.raises(KeyError):
        catalog.get("pendulum")


def test_nonlocal_domain_excludes_zero_velocity():
    d = catalog.nonlocal_domain(catalog.oscillator_one_system(1.0, 1.0))
    assert d["v"][0] > 0
    assert isinstance(d, Domain)


def test_summary_is_plain_data():
    s = catalog.oscillator_two(1.0, 1.0).summary()
    json.dumps(s)
    assert s["checks"] and all(s["checks"].values())
