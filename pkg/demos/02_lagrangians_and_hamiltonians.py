"""
From a multiplier to a Lagrangian and a Hamiltonian
===================================================

Any multiplier mu gives a Lagrangian with d^2L/dv^2 = mu.  The two
multipliers of the first oscillator give a mechanical Lagrangian and a
non-mechanical one.  Both are Legendre-transformed and checked.
"""
import numpy as np

from mforge import catalog
from mforge.expr import evaluate, parse, render
from mforge.lagrangian import lagrangian_from_integral, lagrangian_from_multiplier, legendre

s = catalog.oscillator_one_system(1.0, 1.0)

for mu in ("1/(1 + k*x^2)", "1/(k*v^2 - a^2)"):
    L = lagrangian_from_multiplier(s, mu)
    print(f"mu = {mu}")
    print("  L =", render(L.L))
    print("  Euler-Lagrange residual:", L.el_verdict.status, " hessian = mu:", L.hessian_verdict.status)
    H = legendre(L)
    print("  p(v) =", render(H.p_of_v))
    print("  H =", render(H.H) if H.H is not None else "numeric")
    print(f"  round trip {H.round_trip_error:.1e}, H(x, p(v)) = v p - L within {H.identity_error:.1e}")

# a first integral gives a Lagrangian too; this one differs from L1 by a constant
I = parse("(k*v^2 - a^2)/(2*k*(1 + k*x^2))")
Lp = lagrangian_from_integral(s, I)
print("from I:", render(Lp.L), " EL:", Lp.el_verdict.status)

# on the second oscillator the non-mechanical L carries a potential term phi2(x)
e = catalog.oscillator_two(1.0, 1.0)
L2 = e.lagrangians["L2"]
print("second oscillator, phi2 =", render(L2.phi2))
x = np.linspace(-1, 1, 5)
a = 1.7
e17 = catalog.oscillator_two(1.0, a, certify=False)
ours = [evaluate(e17.lagrangians["L2"].phi2, {"x": xi}, e17.params) for xi in x]
quoted = [evaluate(parse("a*x^2*(2 + k*x^2)/(4*(1 + k*x^2)^2)"), {"x": xi}, e17.params) for xi in x]
print(f"at a = {a}: derived phi2 {np.round(ours, 4)}")
print(f"        coefficient a     {np.round(quoted, 4)}  (status {e.references['phi2_bar_quoted'].status})")

# H2 has no closed form here, so p -> v is inverted by safeguarded Newton
H2 = e.hamiltonians["H2"]
print(f"numeric H2: converged {H2.converged}, round trip {H2.round_trip_error:.1e}")
