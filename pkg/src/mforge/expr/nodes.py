"""Immutable expression trees and the normalizing constructors that build them.

Every public constructor (``add``, ``mul``, ``power``, ``func``, ``integral``)
returns a normalized tree: sums and products are flattened and sorted, numeric
constants are folded exactly, like terms and like bases are merged.  Trees are
never mutated after construction, so subtrees may be shared freely.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Union

Number = Union[Fraction, float]

#: Unary functions understood by the parser, the evaluator and ``differentiate``.
#: ``sign`` is produced when differentiating ``abs`` and is accepted on input so
#: rendered derivatives parse back.
FUNCTIONS = frozenset(
    {"sin", "cos", "tan", "exp", "ln", "sqrt", "abs", "tanh", "atanh", "atan", "sign"}
)

_ODD = frozenset({"sin", "tan", "tanh", "atanh", "atan", "sign"})
_EVEN = frozenset({"cos", "abs"})


def _num(value) -> Number:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 2**53:
            return Fraction(int(value))
        return value
    raise TypeError(f"cannot make a constant from {value!r}")


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("_hash", "_key", "_free")

    # subclasses set ``args`` as a tuple in __init__
    def _init(self) -> None:
        self._hash = None
        self._key = None
        self._free = None

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((type(self).__name__,) + self.args)
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self.args == other.args

    def __ne__(self, other) -> bool:
        return not self.__eq__(other)

    @property
    def sort_key(self) -> tuple:
        if self._key is None:
            self._key = self._make_key()
        return self._key

    @property
    def free_symbols(self) -> frozenset:
        if self._free is None:
            self._free = self._make_free()
        return self._free

    def has(self, name: str) -> bool:
        return name in self.free_symbols

    def __repr__(self) -> str:
        from .render import render

        return f"Expr({render(self)!r})"

    def __str__(self) -> str:
        from .render import render

        return render(self)

    # Arithmetic sugar; every operator goes through the normalizing constructors.
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), MINUS_ONE))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, MINUS_ONE))

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)


class Const(Expr):
    __slots__ = ("value", "args")

    def __init__(self, value) -> None:
        self.value = _num(value)
        self.args = (self.value,)
        self._init()

    def _make_key(self):
        return (0, self.value)

    def _make_free(self):
        return frozenset()

    @property
    def is_integer(self) -> bool:
        return isinstance(self.value, Fraction) and self.value.denominator == 1


class Symbol(Expr):
    """A named variable or parameter; which one it is depends on the binding context."""

    __slots__ = ("name", "args")

    def __init__(self, name: str) -> None:
        self.name = name
        self.args = (name,)
        self._init()

    def _make_key(self):
        return (1, self.name)

    def _make_free(self):
        return frozenset((self.name,))


class Pow(Expr):
    __slots__ = ("base", "exp", "args")

    def __init__(self, base: Expr, exp: Expr) -> None:
        self.base = base
        self.exp = exp
        self.args = (base, exp)
        self._init()

    def _make_key(self):
        # keep powers next to their base when sorting factors
        return (2, (self.base.sort_key, self.exp.sort_key))

    def _make_free(self):
        return self.base.free_symbols | self.exp.free_symbols


class Func(Expr):
    __slots__ = ("name", "arg", "args")

    def __init__(self, name: str, arg: Expr) -> None:
        self.name = name
        self.arg = arg
        self.args = (name, arg)
        self._init()

    def _make_key(self):
        return (3, (self.name, self.arg.sort_key))

    def _make_free(self):
        return self.arg.free_symbols


class Mul(Expr):
    __slots__ = ("factors", "args")

    def __init__(self, factors: tuple) -> None:
        self.factors = factors
        self.args = factors
        self._init()

    def _make_key(self):
        return (4, tuple(f.sort_key for f in self.factors))

    def _make_free(self):
        return frozenset().union(*(f.free_symbols for f in self.factors))


class Add(Expr):
    __slots__ = ("terms", "args")

    def __init__(self, terms: tuple) -> None:
        self.terms = terms
        self.args = terms
        self._init()

    def _make_key(self):
        return (5, tuple(t.sort_key for t in self.terms))

    def _make_free(self):
        return frozenset().union(*(t.free_symbols for t in self.terms))


class Integral(Expr):
    """Definite integral of ``integrand`` over ``dummy`` from ``lower`` to ``upper``.

    This is how antiderivatives without a closed form stay inside the algebra:
    the node evaluates by adaptive quadrature and differentiates by the
    Leibniz rule, so downstream residuals remain ordinary expressions.
    """

    __slots__ = ("integrand", "dummy", "lower", "upper", "args")

    def __init__(self, integrand: Expr, dummy: str, lower: Expr, upper: Expr) -> None:
        self.integrand = integrand
        self.dummy = dummy
        self.lower = lower
        self.upper = upper
        self.args = (integrand, dummy, lower, upper)
        self._init()

    def _make_key(self):
        return (6, (self.integrand.sort_key, self.dummy, self.lower.sort_key, self.upper.sort_key))

    def _make_free(self):
        inner = self.integrand.free_symbols - {self.dummy}
        return inner | self.lower.free_symbols | self.upper.free_symbols


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
TWO = Const(2)
HALF = Const(Fraction(1, 2))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        from .parser import parse

        return parse(value)
    return Const(value)


def const(value) -> Const:
    return Const(value)


def sym(name: str) -> Symbol:
    return Symbol(name)


def symbols(names: str) -> tuple:
    return tuple(Symbol(n) for n in names.replace(",", " ").split())


def is_const(e: Expr, value=None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def coeff_and_rest(e: Expr) -> tuple:
    """Split ``e`` into a numeric coefficient and the remaining (non-numeric) part."""
    if isinstance(e, Const):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def _scaled(coeff: Number, rest: Expr) -> Expr:
    if coeff == 1:
        return rest
    if rest == ONE:
        return Const(coeff)
    if isinstance(rest, Mul):
        return Mul((Const(coeff),) + rest.factors)
    return Mul((Const(coeff), rest))


def add(*terms) -> Expr:
    flat = []
    stack = [as_expr(t) for t in reversed(terms)]
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(reversed(t.terms))
        else:
            flat.append(t)

    number: Number = Fraction(0)
    collected: dict = {}
    for t in flat:
        if isinstance(t, Const):
            number += t.value
            continue
        c, rest = coeff_and_rest(t)
        collected[rest] = collected.get(rest, Fraction(0)) + c

    out = [_scaled(c, rest) for rest, c in collected.items() if c != 0]
    out.sort(key=lambda t: t.sort_key)
    if number != 0:
        out.insert(0, Const(number))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def mul(*factors) -> Expr:
    flat = []
    stack = [as_expr(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(reversed(f.factors))
        else:
            flat.append(f)

    coeff: Number = Fraction(1)
    exps: dict = {}
    for f in flat:
        if isinstance(f, Const):
            coeff *= f.value
            continue
        if isinstance(f, Pow):
            base, e = f.base, f.exp
        else:
            base, e = f, ONE
        exps.setdefault(base, []).append(e)
    if coeff == 0:
        return ZERO

    rebuilt = []
    again = False
    for base, es in exps.items():
        e = es[0] if len(es) == 1 else add(*es)
        p = power(base, e) if len(es) > 1 else (Pow(base, e) if e != ONE else base)
        if isinstance(p, (Const, Mul)):
            again = True
        rebuilt.append(p)
    if again:
        return mul(Const(coeff), *rebuilt)

    rebuilt.sort(key=lambda f: f.sort_key)
    if len(rebuilt) == 1 and isinstance(rebuilt[0], Add) and coeff != 1:
        # numeric coefficients distribute over a lone sum: 2*(a + b) -> 2*a + 2*b
        return add(*(mul(Const(coeff), t) for t in rebuilt[0].terms))
    if not rebuilt:
        return Const(coeff)
    if coeff != 1:
        rebuilt.insert(0, Const(coeff))
    if len(rebuilt) == 1:
        return rebuilt[0]
    return Mul(tuple(rebuilt))


def _int_root(n: int, k: int):
    if n < 0:
        return None
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def _const_power(b: Number, e: Number):
    """Exact value of b**e for numeric b, e when it is representable, else None."""
    if isinstance(b, float) or isinstance(e, float):
        fb, fe = float(b), float(e)
        if fb == 0 and fe < 0:
            return None
        if fb < 0 and not fe.is_integer():
            return None
        return fb**fe
    if e.denominator == 1:
        if b == 0 and e < 0:
            return None
        return b ** int(e)
    if b < 0:
        return None
    q = e.denominator
    num = _int_root(b.numerator, q)
    den = _int_root(b.denominator, q)
    if num is None or den is None:
        return None
    root = Fraction(num, den)
    if root == 0 and e < 0:
        return None
    return root ** e.numerator


def power(base, exp) -> Expr:
    base, exp = as_expr(base), as_expr(exp)
    if exp == ZERO:
        return ONE
    if exp == ONE:
        return base
    if base == ONE:
        return ONE
    if isinstance(base, Const) and isinstance(exp, Const):
        v = _const_power(base.value, exp.value)
        if v is not None:
            return Const(v)
        if isinstance(exp.value, Fraction) and exp.value.denominator != 1:
            # pull out the integer part: 2^(3/2) -> 2 * 2^(1/2)
            whole = exp.value.numerator // exp.value.denominator
            if whole != 0 and base.value != 0:
                frac = exp.value - whole
                return mul(Const(base.value ** whole), Pow(base, Const(frac)))
        return Pow(base, exp)
    if base == ZERO and isinstance(exp, Const) and exp.value > 0:
        return ZERO
    integer_exp = isinstance(exp, Const) and exp.is_integer
    if isinstance(base, Pow):
        inner = base.exp
        inner_fractional = isinstance(inner, Const) and not inner.is_integer
        if integer_exp or inner_fractional:
            return power(base.base, mul(inner, exp))
    if isinstance(base, Mul):
        if integer_exp:
            return mul(*(power(f, exp) for f in base.factors))
        head = base.factors[0]
        if isinstance(head, Const) and head.value > 0:
            rest = base.factors[1:]
            rest_e = rest[0] if len(rest) == 1 else Mul(rest)
            return mul(power(head, exp), power(rest_e, exp))
    if isinstance(base, Func) and base.name == "exp" and integer_exp:
        return func("exp", mul(exp, base.arg))
    if isinstance(base, Add) and isinstance(exp, Const):
        c = _content(base)
        if c is not None and c != 1:
            primitive = add(*(_scaled(coeff_and_rest(t)[0] / c, coeff_and_rest(t)[1]) for t in base.terms))
            return mul(power(Const(c), exp), power(primitive, exp))
    return Pow(base, exp)


def _content(s: Add):
    """Positive rational gcd of the coefficients of a sum, or None for float coefficients."""
    from math import gcd

    num, den = 0, 1
    for t in s.terms:
        c, _ = coeff_and_rest(t)
        if not isinstance(c, Fraction):
            return None
        num = gcd(num, c.numerator)
        den = den * c.denominator // gcd(den, c.denominator)
    if num == 0:
        return None
    return Fraction(num, den)


def func(name: str, arg) -> Expr:
    arg = as_expr(arg)
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    if name == "sqrt":
        return power(arg, HALF)
    if name in _ODD or name in _EVEN:
        c, _ = coeff_and_rest(arg)
        if c < 0:
            flipped = neg(arg)
            if name in _ODD:
                return neg(func(name, flipped))
            return func(name, flipped)
    if arg == ZERO:
        return {
            "sin": ZERO, "cos": ONE, "tan": ZERO, "exp": ONE, "abs": ZERO,
            "tanh": ZERO, "atanh": ZERO, "atan": ZERO, "sign": ZERO,
        }.get(name, Func(name, arg))
    if name == "exp":
        if isinstance(arg, Func) and arg.name == "ln":
            return arg.arg
        if isinstance(arg, Add):
            return mul(*(func("exp", t) for t in arg.terms))
        c, rest = coeff_and_rest(arg)
        if isinstance(rest, Func) and rest.name == "ln" and isinstance(c, Fraction):
            return power(rest.arg, Const(c))
    elif name == "ln":
        if arg == ONE:
            return ZERO
        if isinstance(arg, Func) and arg.name == "exp":
            return arg.arg
    elif name == "abs":
        if isinstance(arg, Const):
            return Const(abs(arg.value))
        if isinstance(arg, Func) and arg.name in ("abs", "exp"):
            return arg
        if isinstance(arg, Pow) and isinstance(arg.exp, Const) and arg.exp.is_integer \
                and arg.exp.value % 2 == 0:
            return arg
    elif name == "sign" and isinstance(arg, Const):
        return Const((arg.value > 0) - (arg.value < 0))
    # inverse pairs that are exact on the whole real domain of the outer function
    if isinstance(arg, Func) and (name, arg.name) in (("atanh", "tanh"), ("tanh", "atanh"),
                                                      ("tan", "atan")):
        return arg.arg
    return Func(name, arg)


def fresh_dummy(base: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    name = f"{base}_"
    while name in avoid:
        name += "_"
    return name


def integral(integrand, dummy: str, lower, upper) -> Expr:
    integrand, lower, upper = as_expr(integrand), as_expr(lower), as_expr(upper)
    if lower == upper:
        return ZERO
    if not integrand.has(dummy):
        return mul(integrand, add(upper, neg(lower)))
    return Integral(integrand, dummy, lower, upper)


def substitute(e: Expr, mapping: Mapping) -> Expr:
    """Replace symbols by expressions (or numbers) and renormalize."""
    repl = {k: as_expr(v) for k, v in mapping.items()}
    if not repl:
        return e
    cache: dict = {}

    def go(node: Expr) -> Expr:
        if not (node.free_symbols & repl.keys()):
            return node
        hit = cache.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Symbol):
            out = repl[node.name]
        elif isinstance(node, Add):
            out = add(*(go(t) for t in node.terms))
        elif isinstance(node, Mul):
            out = mul(*(go(f) for f in node.factors))
        elif isinstance(node, Pow):
            out = power(go(node.base), go(node.exp))
        elif isinstance(node, Func):
            out = func(node.name, go(node.arg))
        elif isinstance(node, Integral):
            inner_map = {k: v for k, v in repl.items() if k != node.dummy}
            dummy = node.dummy
            integrand = node.integrand
            captured = set().union(*(v.free_symbols for v in inner_map.values())) if inner_map else set()
            if dummy in captured:
                new = fresh_dummy(dummy, captured | integrand.free_symbols)
                integrand = substitute(integrand, {dummy: Symbol(new)})
                dummy = new
            out = integral(substitute(integrand, inner_map), dummy, go(node.lower), go(node.upper))
        else:
            out = node
        cache[node] = out
        return out

    return go(e)


def normalize(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the constructors (idempotent)."""
    if isinstance(e, (Const, Symbol)):
        return e
    if isinstance(e, Add):
        return add(*(normalize(t) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(normalize(f) for f in e.factors))
    if isinstance(e, Pow):
        return power(normalize(e.base), normalize(e.exp))
    if isinstance(e, Func):
        return func(e.name, normalize(e.arg))
    if isinstance(e, Integral):
        return integral(normalize(e.integrand), e.dummy, normalize(e.lower), normalize(e.upper))
    raise TypeError(f"not an expression node: {e!r}")


def expand(e: Expr) -> Expr:
    """Distribute products over sums and expand positive integer powers of sums."""
    if isinstance(e, Add):
        return add(*(expand(t) for t in e.terms))
    if isinstance(e, Mul):
        parts = [expand(f) for f in e.factors]
        acc = [ONE]
        for p in parts:
            terms = p.terms if isinstance(p, Add) else (p,)
            acc = [mul(a, t) for a in acc for t in terms]
        return add(*acc)
    if isinstance(e, Pow):
        base = expand(e.base)
        if isinstance(base, Add) and isinstance(e.exp, Const) and e.exp.is_integer \
                and 1 < e.exp.value <= 12:
            # distribute term by term: mul(base, base) would fold back into a power
            acc = list(base.terms)
            for _ in range(int(e.exp.value) - 1):
                acc = [expand(mul(a, t)) for a in acc for t in base.terms]
            return add(*acc)
        return power(base, e.exp)
    if isinstance(e, Func):
        return func(e.name, expand(e.arg))
    return e


def walk(e: Expr):
    """Pre-order traversal of all nodes."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Add):
            stack.extend(node.terms)
        elif isinstance(node, Mul):
            stack.extend(node.factors)
        elif isinstance(node, Pow):
            stack.extend((node.base, node.exp))
        elif isinstance(node, Func):
            stack.append(node.arg)
        elif isinstance(node, Integral):
            stack.extend((node.integrand, node.lower, node.upper))


def has_integral(e: Expr) -> bool:
    return any(isinstance(n, Integral) for n in walk(e))


def substitute_nodes(e: Expr, mapping: Mapping) -> Expr:
    """Replace whole subtrees (matched structurally) and renormalize."""
    if not mapping:
        return e

    def go(node: Expr) -> Expr:
        hit = mapping.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Add):
            return add(*(go(t) for t in node.terms))
        if isinstance(node, Mul):
            return mul(*(go(f) for f in node.factors))
        if isinstance(node, Pow):
            return power(go(node.base), go(node.exp))
        if isinstance(node, Func):
            return func(node.name, go(node.arg))
        if isinstance(node, Integral):
            return integral(go(node.integrand), node.dummy, go(node.lower), go(node.upper))
        return node

    return go(e)
