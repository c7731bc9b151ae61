"""Jacobi multipliers and first integrals of x'' = F(x, x')."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .expr import (
    Certificate, Domain, Expr, Symbol, Verdict, as_expr, differentiate, evaluate_batch,
    mul, nonvanishing, power, substitute, zero_test,
)
from .expr.nodes import MINUS_ONE, add
from .geometry import Sode, sode_to_field


class MultiplierError(ValueError):
    pass


@dataclass(frozen=True)
class Multiplier:
    expr: Expr
    domain: Domain
    certificate: Certificate
    residual_verdict: Verdict
    label: str = ""
    provenance: str = ""

    @property
    def verified(self) -> bool:
        return self.residual_verdict.is_zero and self.certificate.holds


@dataclass(frozen=True)
class FirstIntegral:
    expr: Expr
    residual: Expr
    verified: Verdict
    domain: Optional[Domain] = None
    label: str = ""

    @property
    def ok(self) -> bool:
        return self.verified.is_zero


def multiplier_residual(s: Sode, mu) -> Expr:
    """v dmu/dx + d(mu F)/dv; vanishes iff mu is a Jacobi multiplier."""
    mu = as_expr(mu)
    return add(mul(Symbol("v"), differentiate(mu, "x")), differentiate(mul(mu, s.F), "v"))


def integral_residual(s: Sode, I) -> Expr:
    """Derivative of I along v d/dx + F d/dv."""
    return sode_to_field(s)(as_expr(I))


def _check_symbols(e: Expr, s: Sode, what: str) -> None:
    extra = e.free_symbols - {"x", "v"} - set(s.params)
    if extra:
        raise MultiplierError(f"{what} has symbols outside x, v and parameters: {sorted(extra)}")


def check_multiplier(s: Sode, mu, domain: Optional[Domain] = None, *, label: str = "",
                     provenance: str = "", **zt) -> Multiplier:
    """Verify ``mu`` on ``domain`` (default: the system's domain) and wrap it."""
    mu = as_expr(mu)
    _check_symbols(mu, s, "multiplier")
    d = domain or s.domain
    verdict = zero_test(multiplier_residual(s, mu), d, s.params, **zt)
    cert = nonvanishing(mu, d, s.params)
    return Multiplier(mu, d, cert, verdict, label, provenance)


def check_integral(s: Sode, I, domain: Optional[Domain] = None, *, label: str = "", **zt) -> FirstIntegral:
    I = as_expr(I)
    _check_symbols(I, s, "first integral")
    d = domain or s.domain
    r = integral_residual(s, I)
    return FirstIntegral(I, r, zero_test(r, d, s.params, **zt), d, label)


def integral_from_ratio(mu1: Multiplier, mu2: Multiplier, s: Sode) -> FirstIntegral:
    """The quotient mu1/mu2 of two multipliers is conserved."""
    for m in (mu1, mu2):
        if not m.verified:
            raise MultiplierError(f"multiplier {m.expr} is not verified")
    d = mu1.domain.intersect(mu2.domain)
    for name, (lo, hi) in d.intervals:
        if lo > hi:
            raise MultiplierError(f"multiplier domains do not overlap in {name}")
    cert = nonvanishing(mu2.expr, d, s.params)
    if not cert.holds:
        raise MultiplierError(f"denominator {mu2.expr} {cert.reason} at {cert.witness}")
    return check_integral(s, mul(mu1.expr, power(mu2.expr, MINUS_ONE)), d)


def _one_variable(G: Expr, params: Mapping) -> str:
    names = sorted(G.free_symbols - set(params))
    if len(names) > 1:
        raise MultiplierError(f"G must depend on a single variable, got {names}")
    return names[0] if names else "u"


def compose(G, I, params: Optional[Mapping] = None) -> Expr:
    """G(I) for G written in any single free variable (parameters excluded)."""
    G = as_expr(G)
    var = _one_variable(G, params or {})
    return substitute(G, {var: as_expr(I)})


def scale_multiplier(mu: Multiplier, G, I: FirstIntegral, s: Sode, *, n: int = 256,
                     seed: Optional[int] = None) -> Multiplier:
    """G(I) mu, after checking by sampling that G keeps one sign on the values of I."""
    G = as_expr(G)
    var = _one_variable(G, s.params)
    d = mu.domain
    rng = np.random.default_rng(seed if seed is not None else 0x5EED)
    pts = d.sample(n, rng)
    env = dict(s.params)
    env.update(pts)
    Ivals = evaluate_batch(I.expr, env)
    gvals = evaluate_batch(G, {**s.params, var: Ivals.values[Ivals.ok]})
    vals = gvals.values[gvals.ok]
    if vals.size == 0 or np.any(np.abs(vals) < d.eps_sing) or (np.any(vals > 0) and np.any(vals < 0)):
        raise MultiplierError(f"G = {G} vanishes or changes sign on the sampled values of I")
    new = mul(compose(G, I.expr, s.params), mu.expr)
    return check_multiplier(s, new, d, label=f"G(I)*{mu.label}" if mu.label else "",
                            provenance="scaled")
