"""Probabilistic identity testing.

An expression is declared zero when, at every one of ``n`` random nonsingular
points of a domain, its value is tiny relative to the magnitude of the terms
that make it up.  This is the oracle behind every "is identically zero" claim
in the package.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .domain import DEFAULT_SEED, Domain
from .evaluate import UnboundSymbolError, _Evaluator
from .nodes import Add, Const, Expr, Mul, Pow, ZERO, as_expr

DEFAULT_SAMPLES = 64
DEFAULT_TOL = 1e-9
RETRY_FACTOR = 10


class EmptyDomainError(ValueError):
    """No nonsingular point could be drawn from the domain."""


@dataclass(frozen=True)
class Verdict:
    status: str  # "zero" | "nonzero" | "inconclusive"
    witness: Optional[dict] = None
    max_residual: float = 0.0
    samples: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def is_zero(self) -> bool:
        return self.status == "zero"

    @property
    def is_nonzero(self) -> bool:
        return self.status == "nonzero"

    def as_dict(self) -> dict:
        out = {"status": self.status, "samples": self.samples, "max_residual": self.max_residual}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _term_scale(node: Expr, ev: _Evaluator):
    """Sum of |terms| after distributing products over top-level sums."""
    if isinstance(node, Add):
        return sum(_term_scale(t, ev) for t in node.terms)
    if isinstance(node, Mul):
        out = 1.0
        for f in node.factors:
            out = out * _term_scale(f, ev)
        return out
    if isinstance(node, Pow) and isinstance(node.base, Add) and isinstance(node.exp, Const) \
            and node.exp.is_integer and node.exp.value > 0:
        return _term_scale(node.base, ev) ** float(node.exp.value)
    return np.abs(ev.run(node))


def scaled_residual(e: Expr, env: Mapping, eps: float):
    """Return (|e| / (1 + sum|terms|), ok-mask) at the points of ``env``."""
    n = max([np.size(v) for v in env.values()] + [1])
    ev = _Evaluator(env, n, eps)
    val = ev.run(e)
    scale = np.broadcast_to(_term_scale(e, ev), (n,))
    with np.errstate(all="ignore"):
        r = np.abs(val) / (1.0 + scale)
    return r, ev.ok.copy()


def zero_test(e, d: Domain, params: Optional[Mapping] = None, *, n: int = DEFAULT_SAMPLES,
              tol: float = DEFAULT_TOL, seed: Optional[int] = DEFAULT_SEED) -> Verdict:
    """Decide whether ``e`` vanishes identically on ``d`` (with ``params`` bound)."""
    e = as_expr(e)
    params = dict(params or {})
    missing = e.free_symbols - set(params) - set(d.names)
    if missing:
        raise UnboundSymbolError(sorted(missing)[0])
    if e == ZERO:
        return Verdict("zero", samples=0, extra={"structural": True})

    rng = np.random.default_rng(seed)
    good = 0
    drawn = 0
    worst = 0.0
    budget = RETRY_FACTOR * n
    while good < n and drawn < budget:
        want = min(budget - drawn, max(2 * (n - good), 8))
        pts = d.sample(want, rng)
        drawn += want
        env = dict(params)
        env.update(pts)
        r, ok = scaled_residual(e, env, d.eps_sing)
        take = np.nonzero(ok)[0][: n - good]
        if take.size:
            rr = r[take]
            worst = max(worst, float(rr.max()))
            bad = np.nonzero(~(rr < tol))[0]
            if bad.size:
                i = take[bad[0]]
                witness = {k: float(v[i]) for k, v in pts.items()}
                return Verdict("nonzero", witness, float(r[i]), good + int(bad[0]) + 1)
        good += take.size
    if good == 0:
        raise EmptyDomainError("every sampled point was singular")
    if good < n:
        return Verdict("inconclusive", max_residual=worst, samples=good)
    return Verdict("zero", max_residual=worst, samples=good)


@dataclass(frozen=True)
class Certificate:
    """Outcome of a sampled non-vanishing check."""

    holds: bool
    sign: int = 0
    min_abs: float = 0.0
    samples: int = 0
    witness: Optional[dict] = None
    reason: str = ""

    def as_dict(self) -> dict:
        out = {"holds": self.holds, "sign": self.sign, "min_abs": self.min_abs, "samples": self.samples}
        if self.witness is not None:
            out["witness"] = self.witness
            out["reason"] = self.reason
        return out


def nonvanishing(e, d: Domain, params: Optional[Mapping] = None, *, n: int = 256,
                 seed: Optional[int] = DEFAULT_SEED) -> Certificate:
    """Certify by sampling that ``e`` keeps one sign and stays away from zero on ``d``.

    Probes ``n`` random points plus every corner of the box.
    """
    e = as_expr(e)
    params = dict(params or {})
    missing = e.free_symbols - set(params) - set(d.names)
    if missing:
        raise UnboundSymbolError(sorted(missing)[0])
    rng = np.random.default_rng(seed)
    pts = d.sample(n, rng)
    corners = d.corners()
    pts = {k: np.concatenate([pts[k], corners[k]]) for k in pts}
    m = n + (len(corners[d.names[0]]) if d.names else 0)
    env = dict(params)
    env.update(pts)
    ev = _Evaluator(env, m, d.eps_sing)
    val = np.broadcast_to(ev.run(e), (m,))

    def at(i):
        return {k: float(v[i]) for k, v in pts.items()}

    bad = ~ev.ok | (np.abs(val) < d.eps_sing)
    if bad.any():
        i = int(np.nonzero(bad)[0][0])
        why = "singular" if not ev.ok[i] else "vanishes"
        return Certificate(False, 0, 0.0, m, at(i), why)
    signs = np.sign(val)
    flips = np.nonzero(signs != signs[0])[0]
    if flips.size:
        return Certificate(False, 0, 0.0, m, at(int(flips[0])), "sign change")
    return Certificate(True, int(signs[0]), float(np.min(np.abs(val))), m)


def resolve_abs(e, d: Domain, params: Optional[Mapping] = None) -> Expr:
    """Replace abs(u) by u or -u wherever sampling certifies the sign of u on ``d``."""
    from .nodes import Func, neg, substitute_nodes, walk

    e = as_expr(e)
    names = set(d.names) | set(params or {})
    repl = {}
    for node in walk(e):
        if isinstance(node, Func) and node.name == "abs" and node.arg.free_symbols <= names \
                and node not in repl:
            cert = nonvanishing(node.arg, d.restricted(sorted(node.arg.free_symbols & set(d.names))), params)
            if cert.holds:
                repl[node] = node.arg if cert.sign > 0 else neg(node.arg)
    return substitute_nodes(e, repl) if repl else e
