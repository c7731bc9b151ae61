"""Numerical evaluation of expression trees.

``evaluate_batch`` works on numpy arrays and records, per point, whether any
intermediate step was singular (a denominator below ``eps`` in magnitude) or
left a function's real domain.  ``evaluate`` is the scalar front end that
raises instead.  ``compile_scalar`` turns a tree into a plain Python function
for hot loops such as time stepping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .nodes import Add, Const, Expr, Func, Integral, Mul, Pow, Symbol, as_expr
from .quadrature import adaptive_simpson_batch

DEFAULT_EPS = 1e-9
QUAD_TOL = 1e-10


class SingularityError(ArithmeticError):
    """Evaluation hit a (near-)zero denominator or another singular point."""

    def __init__(self, message: str, subexpr: Optional[Expr] = None, point=None):
        super().__init__(message)
        self.subexpr = subexpr
        self.point = point


class RealDomainError(SingularityError):
    """A function argument left the function's real domain (e.g. atanh(1.5))."""


class UnboundSymbolError(LookupError):
    def __init__(self, name: str):
        super().__init__(f"symbol {name!r} is not bound")
        self.name = name


@dataclass
class BatchResult:
    values: np.ndarray
    ok: np.ndarray
    culprit: Optional[Expr] = None
    reason: Optional[str] = None


class _Evaluator:
    def __init__(self, env: Mapping, n: int, eps: float):
        self.env = env
        self.n = n
        self.eps = eps
        self.ok = np.ones(n, dtype=bool)
        self.culprit = None
        self.reason = None
        self.memo: dict = {}

    def flag(self, mask, node, reason):
        mask = np.broadcast_to(mask, (self.n,))
        fresh = mask & self.ok
        if fresh.any():
            if self.culprit is None:
                self.culprit, self.reason = node, reason
            self.ok &= ~mask

    def run(self, node: Expr):
        hit = self.memo.get(node)
        if hit is not None:
            return hit
        with np.errstate(all="ignore"):
            val = self._eval(node)
        val = np.broadcast_to(np.asarray(val, dtype=float), (self.n,))
        bad = ~np.isfinite(val)
        if bad.any():
            self.flag(bad, node, "singular")
        self.memo[node] = val
        return val

    def _eval(self, node: Expr):
        if isinstance(node, Const):
            return float(node.value)
        if isinstance(node, Symbol):
            try:
                return self.env[node.name]
            except KeyError:
                raise UnboundSymbolError(node.name) from None
        if isinstance(node, Add):
            out = self.run(node.terms[0])
            for t in node.terms[1:]:
                out = out + self.run(t)
            return out
        if isinstance(node, Mul):
            out = self.run(node.factors[0])
            for f in node.factors[1:]:
                out = out * self.run(f)
            return out
        if isinstance(node, Pow):
            return self._pow(node)
        if isinstance(node, Func):
            return self._func(node)
        if isinstance(node, Integral):
            return self._integral(node)
        raise TypeError(node)

    def _pow(self, node: Pow):
        b = self.run(node.base)
        if isinstance(node.exp, Const):
            n = node.exp.value
            if node.exp.is_integer:
                if n < 0:
                    self.flag(np.abs(b) < self.eps, node, "singular")
                return np.power(b, float(n))
            self.flag(b < 0, node, "domain")
            if n < 0:
                self.flag(np.abs(b) < self.eps, node, "singular")
            return np.power(np.where(b < 0, np.nan, b), float(n))
        e = self.run(node.exp)
        self.flag(b < 0, node, "domain")
        self.flag(np.abs(b) < self.eps, node, "singular")
        return np.exp(e * np.log(np.where(b <= 0, np.nan, b)))

    def _func(self, node: Func):
        u = self.run(node.arg)
        name = node.name
        if name == "sin":
            return np.sin(u)
        if name == "cos":
            return np.cos(u)
        if name == "tan":
            self.flag(np.abs(np.cos(u)) < self.eps, node, "singular")
            return np.tan(u)
        if name == "exp":
            return np.exp(u)
        if name == "ln":
            self.flag(u < 0, node, "domain")
            self.flag(np.abs(u) < self.eps, node, "singular")
            return np.log(np.where(u <= 0, np.nan, u))
        if name == "abs":
            return np.abs(u)
        if name == "sign":
            return np.sign(u)
        if name == "tanh":
            return np.tanh(u)
        if name == "atanh":
            self.flag(np.abs(u) > 1, node, "domain")
            self.flag(1 - np.abs(u) < self.eps, node, "singular")
            return np.arctanh(np.where(np.abs(u) >= 1, np.nan, u))
        if name == "atan":
            return np.arctan(u)
        raise ValueError(f"unknown function {name!r}")

    def _integral(self, node: Integral):
        lo = np.broadcast_to(self.run(node.lower), (self.n,)).astype(float)
        hi = np.broadcast_to(self.run(node.upper), (self.n,)).astype(float)
        names = node.integrand.free_symbols - {node.dummy}
        for name in names:
            if name not in self.env:
                raise UnboundSymbolError(name)
        env = {name: self.env[name] for name in names}

        def f(z, idx):
            sub = {name: (v[idx] if np.ndim(v) else v) for name, v in env.items()}
            sub[node.dummy] = z
            inner = _Evaluator(sub, z.size, self.eps)
            vals = inner.run(node.integrand).copy()
            vals[~inner.ok] = np.nan
            return vals

        vals, ok = adaptive_simpson_batch(f, lo, hi, tol=QUAD_TOL)
        self.flag(~ok, node, "singular")
        return vals


def _batch_size(env: Mapping) -> int:
    sizes = [np.size(v) for v in env.values() if np.ndim(v)]
    return max(sizes) if sizes else 1


def evaluate_batch(e, env: Mapping, eps: float = DEFAULT_EPS) -> BatchResult:
    """Evaluate ``e`` at every point of ``env`` (arrays broadcast against scalars)."""
    e = as_expr(e)
    env = {k: (np.asarray(v, dtype=float) if np.ndim(v) else float(v)) for k, v in env.items()}
    ev = _Evaluator(env, _batch_size(env), eps)
    values = ev.run(e).copy()
    values[~ev.ok] = np.nan
    return BatchResult(values, ev.ok, ev.culprit, ev.reason)


def evaluate(e, point: Mapping, params: Optional[Mapping] = None, eps: float = DEFAULT_EPS) -> float:
    """Evaluate ``e`` at a single point; raises on singular or out-of-domain input."""
    env = dict(params or {})
    env.update(point)
    res = evaluate_batch(e, env, eps)
    if not res.ok[0]:
        from .render import render

        where = render(res.culprit) if res.culprit is not None else "?"
        cls = RealDomainError if res.reason == "domain" else SingularityError
        raise cls(f"{res.reason} evaluation of {where} at {dict(point)}", res.culprit, dict(point))
    return float(res.values[0])


# -- compiled scalar functions ----------------------------------------------

def _rpow(b, n):
    if b < 0:
        raise ValueError("fractional power of a negative number")
    return b**n


def _sign(u):
    return float((u > 0) - (u < 0))


def _ln(u):
    return math.log(u)


_NAMESPACE = {
    "_sin": math.sin, "_cos": math.cos, "_tan": math.tan, "_exp": math.exp, "_ln": _ln,
    "_abs": abs, "_sign": _sign, "_tanh": math.tanh, "_atanh": math.atanh, "_atan": math.atan,
    "_rpow": _rpow,
}


def compile_scalar(e, names, params: Optional[Mapping] = None):
    """Compile ``e`` into ``f(*values)`` taking the symbols ``names`` in order.

    Parameters are folded in as constants.  The compiled function raises
    ``ZeroDivisionError``/``ValueError``/``OverflowError`` at singular points.
    """
    e = as_expr(e)
    params = dict(params or {})
    argmap = {name: f"a{i}" for i, name in enumerate(names)}
    ns = dict(_NAMESPACE)
    extra = []

    def code(node: Expr) -> str:
        if isinstance(node, Const):
            return repr(float(node.value))
        if isinstance(node, Symbol):
            if node.name in argmap:
                return argmap[node.name]
            if node.name in params:
                return repr(float(params[node.name]))
            raise UnboundSymbolError(node.name)
        if isinstance(node, Add):
            return "(" + " + ".join(code(t) for t in node.terms) + ")"
        if isinstance(node, Mul):
            return "(" + "*".join(code(f) for f in node.factors) + ")"
        if isinstance(node, Pow):
            b = code(node.base)
            if isinstance(node.exp, Const):
                if node.exp.is_integer:
                    return f"({b})**({int(node.exp.value)})"
                return f"_rpow({b}, {float(node.exp.value)!r})"
            return f"_rpow({b}, {code(node.exp)})"
        if isinstance(node, Func):
            return f"_{node.name}({code(node.arg)})"
        if isinstance(node, Integral):
            key = f"_q{len(extra)}"
            extra.append(node)
            inner_names = sorted(node.free_symbols - set(params))

            def q(*vals, _node=node, _names=inner_names):
                return evaluate(_node, dict(zip(_names, vals)), params)

            ns[key] = q
            return f"{key}({', '.join(argmap[n] for n in inner_names)})"
        raise TypeError(node)

    body = code(e)
    src = f"def _compiled({', '.join(argmap.values())}):\n    return {body}\n"
    exec(compile(src, "<mforge-compiled>", "exec"), ns)
    return ns["_compiled"]
