"""Antiderivatives: a small rule table with a quadrature-backed fallback.

Rules, tried in order on the integrand's var-dependent part:

* linearity and constant factors;
* derivative-divides: ``rest * g(u)`` with ``rest / u'`` free of the variable,
  where ``g`` is a power (power rule, linear substitution, ``u/(a+bu^2)^n``),
  ``exp``, a trig function, ``ln`` or an inverse-hyperbolic/trig function;
* polynomial over a quadratic: polynomial division, a logarithm for the
  derivative-of-denominator part and ``atan`` or ``atanh`` for the rest,
  branch chosen by the sign of the discriminant-like product at the bound
  parameter values;
* one retry after expanding products of sums.

Anything else becomes an :class:`~mforge.expr.nodes.Integral` node anchored at a
reference point, evaluated by adaptive Simpson quadrature.
"""
from __future__ import annotations

from typing import Mapping, Optional

from .calculus import differentiate
from .evaluate import SingularityError, UnboundSymbolError, evaluate
from .nodes import (
    Add, Const, Expr, Func, Mul, Pow, Symbol, HALF, MINUS_ONE, ONE, TWO, ZERO,
    add, as_expr, expand, fresh_dummy, func, integral, mul, neg, power, substitute,
)


def _ln_abs(u: Expr) -> Expr:
    return func("ln", func("abs", u))


def _func_antiderivative(name: str, s: Expr) -> Optional[Expr]:
    """Antiderivative of f(s) with respect to s."""
    if name == "exp":
        return func("exp", s)
    if name == "sin":
        return neg(func("cos", s))
    if name == "cos":
        return func("sin", s)
    if name == "tan":
        return neg(_ln_abs(func("cos", s)))
    if name == "ln":
        return add(mul(s, func("ln", s)), neg(s))
    if name == "atanh":
        return add(mul(s, func("atanh", s)), mul(HALF, func("ln", add(ONE, neg(power(s, TWO))))))
    if name == "atan":
        return add(mul(s, func("atan", s)), mul(-HALF.value, func("ln", add(ONE, power(s, TWO)))))
    if name == "abs":
        return mul(HALF, s, func("abs", s))
    if name == "sign":
        return func("abs", s)
    return None


def poly_coeffs(e: Expr, var: str) -> Optional[list]:
    """Coefficients [c0, c1, ...] if ``e`` is a polynomial in ``var``, else None."""
    coeffs: dict = {}
    for t in (expand(e).terms if isinstance(expand(e), Add) else (expand(e),)):
        k = 0
        rest = []
        for f in (t.factors if isinstance(t, Mul) else (t,)):
            if not f.has(var):
                rest.append(f)
            elif isinstance(f, Symbol):
                k += 1
            elif isinstance(f, Pow) and isinstance(f.base, Symbol) and isinstance(f.exp, Const) \
                    and f.exp.is_integer and f.exp.value > 0:
                k += int(f.exp.value)
            else:
                return None
        coeffs[k] = add(coeffs.get(k, ZERO), mul(*rest))
    if not coeffs:
        return [ZERO]
    out = [coeffs.get(i, ZERO) for i in range(max(coeffs) + 1)]
    while len(out) > 1 and out[-1] == ZERO:
        out.pop()
    return out


def _sign_at(e: Expr, params: Optional[Mapping]) -> Optional[int]:
    if params is None:
        return None
    try:
        v = evaluate(e, {}, params)
    except (UnboundSymbolError, SingularityError):
        return None
    return (v > 0) - (v < 0)


def _inverse_quadratic(A: Expr, B: Expr, C: Expr, x: Expr, params) -> Optional[Expr]:
    """Antiderivative of 1/(A + B x + C x^2) in x."""
    s = add(x, mul(B, power(mul(TWO, C), MINUS_ONE)))
    D = add(A, neg(mul(power(B, TWO), power(mul(4, C), MINUS_ONE))))
    if D == ZERO:
        return neg(power(mul(C, s), MINUS_ONE))
    sg = _sign_at(mul(D, C), params)
    if sg is None or sg == 0:
        return None
    if sg > 0:
        r = power(mul(C, power(D, MINUS_ONE)), HALF)
        return mul(func("atan", mul(r, s)), power(mul(D, r), MINUS_ONE))
    r = power(neg(mul(C, power(D, MINUS_ONE))), HALF)
    return mul(func("atanh", mul(r, s)), power(mul(D, r), MINUS_ONE))


def _poly_divmod(num: list, den: list):
    """Divide coefficient lists (low order first); den has nonzero leading coefficient."""
    num = list(num)
    q = [ZERO] * max(len(num) - len(den) + 1, 1)
    lead = den[-1]
    while len(num) >= len(den) and any(c != ZERO for c in num):
        shift = len(num) - len(den)
        c = mul(num[-1], power(lead, MINUS_ONE))
        q[shift] = add(q[shift], c)
        for i, dc in enumerate(den):
            num[shift + i] = add(num[shift + i], neg(mul(c, dc)))
        num.pop()
    return q, num


def _from_coeffs(cs: list, x: Expr) -> Expr:
    return add(*(mul(c, power(x, Const(i))) for i, c in enumerate(cs)))


def _rational_quadratic(P: Expr, q: Expr, var: str, params) -> Optional[Expr]:
    pc = poly_coeffs(P, var)
    qc = poly_coeffs(q, var)
    if pc is None or qc is None or len(qc) != 3:
        return None
    x = Symbol(var)
    quot, rem = _poly_divmod(pc, qc)
    A, B, C = qc
    rem = rem + [ZERO] * (2 - len(rem))
    beta, alpha = rem[0], rem[1]
    parts = []
    if any(c != ZERO for c in quot):
        poly_part = _table(_from_coeffs(quot, x), var, params)
        if poly_part is None:
            return None
        parts.append(poly_part)
    if alpha != ZERO:
        parts.append(mul(alpha, power(mul(TWO, C), MINUS_ONE), _ln_abs(q)))
    const = add(beta, neg(mul(alpha, B, power(mul(TWO, C), MINUS_ONE))))
    if const != ZERO:
        inv = _inverse_quadratic(A, B, C, x, params)
        if inv is None:
            return None
        parts.append(mul(const, inv))
    return add(*parts)


def _table(e: Expr, var: str, params, expanded: bool = False) -> Optional[Expr]:
    if not e.has(var):
        return mul(e, Symbol(var))
    if isinstance(e, Add):
        parts = []
        for t in e.terms:
            r = _table(t, var, params)
            if r is None:
                break
            parts.append(r)
        else:
            return add(*parts)
        return None if expanded else _retry_expanded(e, var, params)

    factors = e.factors if isinstance(e, Mul) else (e,)
    const = [f for f in factors if not f.has(var)]
    if const:
        dep = mul(*(f for f in factors if f.has(var)))
        r = _table(dep, var, params, expanded)
        return None if r is None else mul(*const, r)

    # derivative-divides
    for i, f in enumerate(factors):
        rest = mul(*factors[:i], *factors[i + 1:])
        if isinstance(f, Symbol):
            u, F = f, mul(HALF, power(f, TWO))
        elif isinstance(f, Pow) and isinstance(f.exp, Const):
            u = f.base
            F = _ln_abs(u) if f.exp.value == -1 else \
                mul(power(u, add(f.exp, ONE)), power(add(f.exp, ONE), MINUS_ONE))
        elif isinstance(f, Func):
            u = f.arg
            F = _func_antiderivative(f.name, u)
            if F is None:
                continue
        else:
            continue
        du = differentiate(u, var)
        if du == ZERO:
            continue
        ratio = mul(rest, power(du, MINUS_ONE))
        if not ratio.has(var):
            return mul(ratio, F)

    # polynomial over a quadratic
    for i, f in enumerate(factors):
        if isinstance(f, Pow) and f.exp == MINUS_ONE:
            rest = mul(*factors[:i], *factors[i + 1:])
            r = _rational_quadratic(rest, f.base, var, params)
            if r is not None:
                return r

    return None if expanded else _retry_expanded(e, var, params)


def _retry_expanded(e: Expr, var: str, params) -> Optional[Expr]:
    ex = expand(e)
    if ex == e:
        return None
    return _table(ex, var, params, expanded=True)


def table_antiderivative(e, var: str, params: Optional[Mapping] = None) -> Optional[Expr]:
    """Closed-form antiderivative from the rule table, or None."""
    return _table(as_expr(e), var, params)


def antiderivative(e, var: str, params: Optional[Mapping] = None, ref=0) -> Expr:
    """Antiderivative of ``e`` in ``var``.

    Closed form when the rule table applies (``params`` picks the atan/atanh
    branch); otherwise ``integral(e, ref..var)`` evaluated by quadrature.
    """
    e = as_expr(e)
    r = _table(e, var, params)
    if r is not None:
        return r
    dummy = fresh_dummy(var, e.free_symbols)
    return integral(substitute(e, {var: Symbol(dummy)}), dummy, as_expr(ref), Symbol(var))


def definite_integral(e, var: str, lower, upper, params: Optional[Mapping] = None) -> Expr:
    e = as_expr(e)
    lower, upper = as_expr(lower), as_expr(upper)
    r = _table(e, var, params)
    if r is not None:
        return add(substitute(r, {var: upper}), neg(substitute(r, {var: lower})))
    dummy = fresh_dummy(var, e.free_symbols | lower.free_symbols | upper.free_symbols)
    return integral(substitute(e, {var: Symbol(dummy)}), dummy, lower, upper)


def is_closed_form(e: Expr) -> bool:
    from .nodes import has_integral

    return not has_integral(e)
