"""
A non-local symmetry on a covering system
=========================================

Adjoin w' = F(x, v) h(v) with h = 1/v.  Then g = exp(w)/v is a first integral
of the extended field, and Y = g X_H commutes with d/dt + X_H.  We build Y,
check the bracket, and cross-check with the determining equations.
"""
from mforge import catalog
from mforge.expr import parse, render
from mforge.geometry import PointSymmetryAnsatz
from mforge.nonlocal_symmetry import (
    bracket_test, build_symmetry, characteristic_g, determining_test, extend,
)

s = catalog.oscillator_one_system(1.0, 1.0)
d = catalog.nonlocal_domain(s)  # v kept positive, so 1/v is regular
es = extend(s, "1/v", d)
print("w' =", render(es.Haux), " on", dict(es.domain.intervals))

g = characteristic_g(es.h, None, s.params, es.domain)
print("g =", render(g))

cand = build_symmetry(es, g)
for q in ("x", "v", "w"):
    print(f"  Y[{q}] = {render(cand.Y[q])}")
print("[Y, Xbar] vanishes:", cand.is_symmetry)

# the same Y read as a point-symmetry ansatz in (t, x, v, w)
A = PointSymmetryAnsatz(parse("0"), [(q, cand.Y[q]) for q in ("x", "v", "w")])
ok, res, _ = determining_test(es, A)
print("determining residuals all zero:", ok)

# x-translation is not a symmetry, and both tests say so
shift = PointSymmetryAnsatz(parse("0"), [("x", parse("1")), ("v", parse("0")), ("w", parse("0"))])
print("d/dx: determining", determining_test(es, shift)[0], " bracket", bracket_test(es, shift.field())[0])

# any other G works as well, e.g. g = (w - ln v)^3
g3 = characteristic_g(es.h, parse("u^3"), s.params, es.domain)
print("G = u^3 gives", render(g3), "symmetry:", build_symmetry(es, g3).is_symmetry)
