"""Text rendering in the parser's own grammar, so ``parse(render(e)) == e``."""
from __future__ import annotations

from fractions import Fraction

from .nodes import Add, Const, Expr, Func, Integral, Mul, Pow, Symbol, mul, power

_C = Const

# precedence levels used to decide parenthesization
_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


def _num_text(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    return repr(float(v))


def _const_prec(v) -> int:
    if v < 0:
        return _UNARY
    if isinstance(v, Fraction) and v.denominator != 1:
        return _MUL
    return _ATOM


def _wrap(text: str, prec: int, need: int) -> str:
    return f"({text})" if prec < need else text


def _r(e: Expr):
    """Return (text, precedence)."""
    if isinstance(e, Const):
        return _num_text(e.value), _const_prec(e.value)
    if isinstance(e, Symbol):
        return e.name, _ATOM
    if isinstance(e, Func):
        return f"{e.name}({_r(e.arg)[0]})", _ATOM
    if isinstance(e, Integral):
        body = _r(e.integrand)[0]
        lo, hi = _r(e.lower)[0], _r(e.upper)[0]
        return f"integral({body}, {e.dummy}, {lo}, {hi})", _ATOM
    if isinstance(e, Pow):
        return _r_pow(e)
    if isinstance(e, Mul):
        return _r_mul(e)
    if isinstance(e, Add):
        return _r_add(e)
    raise TypeError(e)


def _r_pow(e: Pow):
    if isinstance(e.exp, Const) and e.exp.value == Fraction(1, 2):
        return f"sqrt({_r(e.base)[0]})", _ATOM
    if isinstance(e.exp, Const) and e.exp.value < 0:
        return _r_mul(Mul((e,)))
    bt, bp = _r(e.base)
    et, ep = _r(e.exp)
    # base binds tighter than ^, and ^ is right-associative
    return f"{_wrap(bt, bp, _ATOM)}^{_wrap(et, ep, _POW)}", _POW


def _split_fraction(e: Mul):
    coeff = Fraction(1)
    num, den = [], []
    for f in e.factors:
        if isinstance(f, Const):
            coeff = f.value if not isinstance(coeff, Fraction) else coeff * f.value
        elif isinstance(f, Pow) and isinstance(f.exp, Const) and f.exp.value < 0:
            den.append(power(f.base, _C(-f.exp.value)))
        else:
            num.append(f)
    return coeff, num, den


def _product_text(factors) -> str:
    parts = []
    for f in factors:
        t, p = _r(f)
        parts.append(_wrap(t, p, _MUL + 1) if p != _UNARY else f"({t})")
    return "*".join(parts)


def _r_mul(e: Mul):
    coeff, num, den = _split_fraction(e)
    sums = [f for f in num if isinstance(f, Add)]
    if coeff != 1 and sums and len(num) + len(den) > 1:
        # parsing c*(a + b) distributes c, so the coefficient must meet another factor first
        others = [f for f in num if not isinstance(f, Add)]
        if others:
            num = others + sums
        elif den:
            head = _r(mul(_C(coeff), *(power(d, _C(-1)) for d in den)))[0]
            return f"{head}*{_product_text(sums)}", (_UNARY if coeff < 0 else _MUL)
        else:
            return f"{_product_text(sums)}*{_product_text([_C(coeff)])}", _MUL
    negative = coeff < 0
    coeff = abs(coeff)
    if isinstance(coeff, Fraction):
        top, bottom = coeff.numerator, coeff.denominator
    else:
        top, bottom = coeff, 1
    num_factors = ([_C(top)] if top != 1 else []) + num
    den_factors = ([_C(bottom)] if bottom != 1 else []) + den
    if not num_factors:
        text, prec = "1", _ATOM
    elif len(num_factors) == 1:
        text, prec = _r(num_factors[0])
    else:
        text, prec = _product_text(num_factors), _MUL
    if den_factors:
        if len(den_factors) == 1:
            dt, dp = _r(den_factors[0])
            den_text = _wrap(dt, dp, _POW)
        else:
            den_text = f"({_product_text(den_factors)})"
        text, prec = f"{_wrap(text, prec, _MUL)}/{den_text}", _MUL
    if negative:
        return f"-{_wrap(text, prec, _MUL)}", _UNARY
    return text, prec


def _r_add(e: Add):
    out = []
    for i, t in enumerate(e.terms):
        negative = False
        if isinstance(t, Const) and t.value < 0:
            negative, body = True, _C(-t.value)
        elif isinstance(t, Mul) and isinstance(t.factors[0], Const) and t.factors[0].value < 0:
            negative, body = True, mul(_C(-t.factors[0].value), *t.factors[1:])
        else:
            body = t
        bt, bp = _r(body)
        if bp == _UNARY:
            bt = f"({bt})"
        if i == 0:
            out.append(_r(t)[0] if negative else bt)
        else:
            out.append((" - " if negative else " + ") + bt)
    return "".join(out), _ADD


def render(e: Expr) -> str:
    return _r(e)[0]
