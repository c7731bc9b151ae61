"""
New multipliers from old ones
=============================

If mu is a multiplier and I a first integral, G(I) mu is a multiplier for any
smooth non-vanishing G.  On the harmonic oscillator mu = 1 and I = x^2 + v^2,
so exp(x^2 + v^2) is a multiplier, and its Lagrangian has no closed form.
"""
from mforge import catalog
from mforge.expr import Domain, evaluate, parse, render
from mforge.lagrangian import lagrangian_from_multiplier
from mforge.multiplier import check_integral, check_multiplier, integral_from_ratio, scale_multiplier

s = catalog.harmonic_system(1.0)
mu = check_multiplier(s, "1")
I = check_integral(s, "a^2*x^2 + v^2")

for G in ("exp(u)", "1 + u^2", "3 + u^3"):
    m = scale_multiplier(mu, parse(G), I, s)
    back = integral_from_ratio(m, mu, s)
    print(f"G = {G:8s} mu = {render(m.expr):26s} verified {m.verified}, ratio conserved {back.ok}")

# the double integral over v is left as quadrature, and still passes the checks
d = Domain({"x": (-1, 1), "v": (-1, 1)})
L = lagrangian_from_multiplier(s, parse("exp(x^2 + v^2)"), domain=d)
print("L =", render(L.L))
print("numeric:", L.numeric, " EL:", L.el_verdict.status, f"(max {L.el_verdict.max_residual:.1e})")
print("L(0.3, 0.4) =", evaluate(L.L, {"x": 0.3, "v": 0.4}, s.params))
