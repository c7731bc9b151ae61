"""Covering of x'' = F by an auxiliary variable w with w' = F(x, v) h(v), and the
non-local symmetries g X_H it carries.

Coordinates are (t, x, v, w).  ``X_H`` is v d/dx + F d/dv + Haux d/dw and
``Xbar`` is d/dt + X_H.  For g(v, w) solving dg/dv + h dg/dw = 0, g is a first
integral of X_H and g X_H commutes with Xbar.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .expr import (
    Domain, Expr, Symbol, Verdict, add, antiderivative, as_expr, differentiate, func, mul,
    neg, nonvanishing, resolve_abs, substitute, zero_test,
)
from .expr.nodes import ONE, ZERO
from .geometry import (
    TIME, PointSymmetryAnsatz, Sode, VectorField, jet_name, lie_bracket, prolong,
)

COORDS = (TIME, "x", "v", "w")
DEFAULT_W = (-1.0, 1.0)


class NonlocalError(ValueError):
    pass


class NotFirstIntegralError(NonlocalError):
    pass


@dataclass(frozen=True)
class ExtendedSystem:
    base: Sode
    h: Expr
    Haux: Expr
    field: VectorField  # d/dt + v d/dx + F d/dv + Haux d/dw
    domain: Domain

    @property
    def params(self) -> dict:
        return self.base.params

    @property
    def F(self) -> Expr:
        return self.base.F

    @property
    def X_H(self) -> VectorField:
        """The autonomous part, without d/dt."""
        return VectorField(COORDS, (ZERO,) + self.field.components[1:])


@dataclass(frozen=True)
class NonlocalSymmetryCandidate:
    g: Expr
    Y: VectorField
    bracket: VectorField  # [Y, Xbar]
    bracket_residual: VectorField  # [Y, Xbar] - lambda X_H
    lam: Expr  # -(Xbar g)
    verdicts: dict
    first_integral: Optional[Verdict] = None

    @property
    def is_symmetry(self) -> bool:
        return all(v.is_zero for v in self.verdicts.values())


def _h_domain(s: Sode, domain: Optional[Domain], w_interval) -> Domain:
    base = domain or s.domain
    d = base.as_dict()
    d.setdefault("w", tuple(w_interval))
    return Domain(d, base.eps_sing)


def extend(s: Sode, h, domain: Optional[Domain] = None, w_interval=DEFAULT_W) -> ExtendedSystem:
    """Adjoin w' = F h(v).  ``domain`` (x, v) must keep h away from zero."""
    h = as_expr(h)
    extra = h.free_symbols - {"v"} - set(s.params)
    if extra:
        raise NonlocalError(f"h must depend on v only, got {sorted(extra)}")
    d = _h_domain(s, domain, w_interval)
    cert = nonvanishing(h, d.restricted(["v"]), s.params)
    if not cert.holds:
        raise NonlocalError(f"h = {h} {cert.reason} at {cert.witness}; restrict the v-domain")
    Haux = mul(s.F, h)
    field = VectorField(COORDS, (ONE, Symbol("v"), s.F, Haux))
    return ExtendedSystem(s, h, Haux, field, d)


def characteristic_g(h, G=None, params: Optional[Mapping] = None,
                     domain: Optional[Domain] = None) -> Expr:
    """g = G(w - int h dv); default G = exp.

    With a ``domain``, absolute values of sign-definite arguments (the ln|v| of
    h = 1/v) are resolved, so g comes out as exp(w)/v on v > 0.
    """
    h = as_expr(h)
    K = antiderivative(h, "v", params)
    if domain is not None:
        K = resolve_abs(K, domain, params)
    u = add(Symbol("w"), neg(K))
    if G is None:
        return func("exp", u)
    G = as_expr(G)
    names = sorted(G.free_symbols - set(params or {}))
    if len(names) > 1:
        raise NonlocalError(f"G must depend on one variable, got {names}")
    return substitute(G, {names[0]: u}) if names else G


def characteristic_residual(h, g) -> Expr:
    """dg/dv + h dg/dw."""
    g = as_expr(g)
    return add(differentiate(g, "v"), mul(as_expr(h), differentiate(g, "w")))


def bracket_identity(es: ExtendedSystem, g) -> VectorField:
    """[g X_H, Xbar] + (Xbar g) X_H, which vanishes for every smooth g."""
    g = as_expr(g)
    X = es.X_H
    return lie_bracket(X.scaled(g), es.field) + X.scaled(es.field(g))


def build_symmetry(es: ExtendedSystem, g, *, check: bool = True, **zt) -> NonlocalSymmetryCandidate:
    """Y = g X_H with its bracket against Xbar and the verdicts on it."""
    g = as_expr(g)
    bad = g.free_symbols & {TIME, "x"}
    if bad:
        raise NonlocalError(f"g must not depend on {sorted(bad)}")
    X = es.X_H
    fi = None
    if check:
        F_zero = zero_test(es.F, es.domain, es.params, **zt).is_zero
        if not F_zero:
            fi = zero_test(X(g), es.domain, es.params, **zt)
            if not fi.is_zero:
                raise NotFirstIntegralError(f"X_H g does not vanish (witness {fi.witness})")
    Y = X.scaled(g)
    br = lie_bracket(Y, es.field)
    lam = neg(es.field(g))
    resid = br - X.scaled(lam)
    verdicts = {q: zero_test(c, es.domain, es.params, **zt) for q, c in zip(COORDS, resid.components)}
    return NonlocalSymmetryCandidate(g, Y, br, resid, lam, verdicts, fi)


def bracket_test(es: ExtendedSystem, Y: VectorField, **zt) -> tuple:
    """Is [Y, Xbar] = f Xbar?  Returns (passes, residual field, f)."""
    Y = Y.with_coords(COORDS)
    br = lie_bracket(Y, es.field)
    f = br[TIME]
    resid = br - es.field.scaled(f)
    ok = all(zero_test(c, es.domain, es.params, **zt).is_zero for c in resid.components)
    return ok, resid, f


def determining_residuals(es: ExtendedSystem, ansatz: PointSymmetryAnsatz) -> list:
    """(Y1 Delta_i) on Delta = 0 for Delta = (x_1 - v, v_1 - F, w_1 - Haux).

    Y1 is the first prolongation of the ansatz; the dependent variables are
    x, v, w in that order.
    """
    if ansatz.time != TIME or set(ansatz.dependents) != {"x", "v", "w"}:
        raise NonlocalError("ansatz must be on (t, x, v, w)")
    Y1 = prolong(ansatz, 1)
    rhs = {"x": Symbol("v"), "v": es.F, "w": es.Haux}
    shell = {jet_name(q, 1): r for q, r in rhs.items()}
    out = []
    for q in ("x", "v", "w"):
        delta = add(Symbol(jet_name(q, 1)), neg(rhs[q]))
        out.append(substitute(Y1(delta), shell))
    return out


def determining_test(es: ExtendedSystem, ansatz: PointSymmetryAnsatz, **zt) -> tuple:
    res = determining_residuals(es, ansatz)
    verdicts = [zero_test(r, es.domain, es.params, **zt) for r in res]
    return all(v.is_zero for v in verdicts), res, verdicts
