"""Exact partial derivatives of expression trees."""
from __future__ import annotations

from functools import lru_cache

from .nodes import (
    Add, Expr, Func, Integral, Mul, Pow, Symbol, ONE, ZERO, MINUS_ONE, TWO,
    add, as_expr, func, integral, mul, neg, power, substitute, Symbol as _S,
)


def _dfunc(name: str, u: Expr) -> Expr:
    """d/du of f(u)."""
    if name == "sin":
        return func("cos", u)
    if name == "cos":
        return neg(func("sin", u))
    if name == "tan":
        return add(ONE, power(func("tan", u), TWO))
    if name == "exp":
        return func("exp", u)
    if name == "ln":
        return power(u, MINUS_ONE)
    if name == "abs":
        # sign(0) = 0 by convention
        return func("sign", u)
    if name == "sign":
        return ZERO
    if name == "tanh":
        return add(ONE, neg(power(func("tanh", u), TWO)))
    if name == "atanh":
        return power(add(ONE, neg(power(u, TWO))), MINUS_ONE)
    if name == "atan":
        return power(add(ONE, power(u, TWO)), MINUS_ONE)
    raise ValueError(f"no derivative rule for {name!r}")


@lru_cache(maxsize=1 << 16)
def _diff(e: Expr, var: str) -> Expr:
    if var not in e.free_symbols:
        return ZERO
    if isinstance(e, Symbol):
        return ONE
    if isinstance(e, Add):
        return add(*(_diff(t, var) for t in e.terms))
    if isinstance(e, Mul):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            df = _diff(f, var)
            if df != ZERO:
                terms.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        b, n = e.base, e.exp
        db = _diff(b, var)
        if var not in n.free_symbols:
            return mul(n, power(b, add(n, MINUS_ONE)), db)
        dn = _diff(n, var)
        return mul(e, add(mul(dn, func("ln", b)), mul(n, db, power(b, MINUS_ONE))))
    if isinstance(e, Func):
        return mul(_dfunc(e.name, e.arg), _diff(e.arg, var))
    if isinstance(e, Integral):
        # Leibniz rule; the dummy never equals var (substitute renames on capture)
        f, z = e.integrand, e.dummy
        parts = [
            mul(substitute(f, {z: e.upper}), _diff(e.upper, var)),
            neg(mul(substitute(f, {z: e.lower}), _diff(e.lower, var))),
        ]
        if var in f.free_symbols and var != z:
            parts.append(integral(_diff(f, var), z, e.lower, e.upper))
        return add(*parts)
    raise TypeError(f"cannot differentiate {e!r}")


def differentiate(e, var) -> Expr:
    """Partial derivative of ``e`` with respect to the symbol ``var``."""
    name = var.name if isinstance(var, _S) else var
    return _diff(as_expr(e), name)


def gradient(e, names) -> tuple:
    return tuple(differentiate(e, n) for n in names)
