"""Lagrangians from multipliers or first integrals, Euler-Lagrange checks, Legendre transform.

A multiplier mu fixes L up to gauge through d^2L/dv^2 = mu.  We integrate
twice in v from v0, take the gauge term phi1*v to be zero and fix the
x-only part phi2 from the Euler-Lagrange equation at v = v0, which reduces
it to a quadrature of mu*F in x anchored at x = 0.

When the antiderivative table gives up, L is kept as an integral node,
L = int_{v0}^{v} (v - z) mu(x, z) dz + phi2(x), and everything downstream
(differentiation, zero tests, Legendre) keeps working, only with a looser
tolerance to absorb quadrature error.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from .expr import (
    Certificate, Domain, EmptyDomainError, Expr, Symbol, Verdict, add, as_expr,
    definite_integral, differentiate, expand, evaluate_batch, has_integral, integral, mul, neg,
    nonvanishing, power, substitute, table_antiderivative, zero_test,
)
from .expr.nodes import Add, Const, Func, MINUS_ONE, Mul, Pow, fresh_dummy, func, walk
from .geometry import Sode
from .multiplier import FirstIntegral, Multiplier

SYMBOLIC_TOL = 1e-9
NUMERIC_TOL = 1e-6
NEWTON_TOL = 1e-12


class LagrangianError(ValueError):
    pass


class KernelSingularityError(LagrangianError):
    """The 1/z^2 kernel would be integrated across z = 0."""


class LegendreError(ValueError):
    pass


@dataclass(frozen=True)
class Lagrangian:
    L: Expr
    phi2: Expr
    params: dict
    domain: Domain
    source: str  # "from-multiplier" | "from-integral" | "catalog"
    gauge_note: str = ""
    regular: Optional[Certificate] = None
    multiplier: Optional[Expr] = None
    el_verdict: Optional[Verdict] = None
    hessian_verdict: Optional[Verdict] = None
    label: str = ""

    @property
    def numeric(self) -> bool:
        return has_integral(self.L)

    @property
    def tol(self) -> float:
        return NUMERIC_TOL if self.numeric else SYMBOLIC_TOL

    @property
    def verified(self) -> bool:
        ok = self.el_verdict is not None and self.el_verdict.is_zero
        if self.hessian_verdict is not None:
            ok = ok and self.hessian_verdict.is_zero
        return ok

    def energy(self) -> Expr:
        """v dL/dv - L, conserved along the motion."""
        return add(mul(Symbol("v"), differentiate(self.L, "v")), neg(self.L))


def _expr_of(L) -> Expr:
    return L.L if isinstance(L, Lagrangian) else as_expr(L)


def hessian(L) -> Expr:
    return differentiate(differentiate(_expr_of(L), "v"), "v")


def euler_lagrange_residual(s: Sode, L) -> Expr:
    """dL/dx - (v d2L/dvdx + F d2L/dv2): the Euler-Lagrange equation with v' = F."""
    L = _expr_of(L)
    Lv = differentiate(L, "v")
    return add(differentiate(L, "x"),
               neg(mul(Symbol("v"), differentiate(Lv, "x"))),
               neg(mul(s.F, differentiate(Lv, "v"))))


def _tol_for(e: Expr) -> float:
    return NUMERIC_TOL if has_integral(e) else SYMBOLIC_TOL


def check_euler_lagrange(s: Sode, L, domain: Optional[Domain] = None, **zt) -> Verdict:
    r = euler_lagrange_residual(s, L)
    zt.setdefault("tol", _tol_for(r))
    return zero_test(r, domain or s.domain, s.params, **zt)


def numeric_params(e: Expr, params: Mapping) -> Expr:
    """Replace parameter symbols by their (exact decimal) values."""
    return substitute(e, {k: Const(Fraction(repr(float(v)))) for k, v in params.items()})


def _phi2(muF0: Expr, params) -> Expr:
    z = fresh_dummy("x", muF0.free_symbols)
    return definite_integral(substitute(muF0, {"x": Symbol(z)}), z, 0, Symbol("x"), params)


def _closed_double(mu: Expr, v0: Expr, params) -> Optional[Expr]:
    A = table_antiderivative(mu, "v", params)
    if A is None:
        return None
    A = add(A, neg(substitute(A, {"v": v0})))
    M = table_antiderivative(A, "v", params)
    if M is None:
        return None
    return add(M, neg(substitute(M, {"v": v0})))


def _numeric_double(mu: Expr, v0: Expr) -> Expr:
    z = fresh_dummy("v", mu.free_symbols)
    v = Symbol("v")
    return integral(mul(add(v, neg(Symbol(z))), substitute(mu, {"v": Symbol(z)})), z, v0, v)


def _evaluable(e: Expr, d: Domain, params, n: int = 32) -> bool:
    """True if ``e`` is finite at most sampled points (structural checks can miss k = 0 poles)."""
    env = dict(params)
    env.update(d.sample(n, np.random.default_rng(0x5EED)))
    return evaluate_batch(e, env).ok.mean() >= 0.5


def _verify(s: Sode, L: Expr, mu: Expr, d: Domain):
    tol = _tol_for(L)
    if not _evaluable(L, d, s.params):
        return None, None
    try:
        hv = zero_test(add(hessian(L), neg(mu)), d, s.params, tol=tol)
        ev = zero_test(euler_lagrange_residual(s, L), d, s.params, tol=tol)
    except EmptyDomainError:
        return None, None
    return hv, ev


def lagrangian_from_multiplier(s: Sode, mu, v0: float = 0.0, domain: Optional[Domain] = None,
                               *, label: str = "") -> Lagrangian:
    """L = (double v-antiderivative of mu from v0) + phi2(x), gauge phi1 = 0.

    phi2(x) = int_0^x mu(z, v0) F(z, v0) dz.  The parameters are first kept
    symbolic; if the result is unusable at the bound values (k = 0, say) they
    are substituted and the construction repeated; as a last resort the
    double integral is left to quadrature.
    """
    if isinstance(mu, Multiplier):
        mu_e, d = mu.expr, domain or mu.domain
    else:
        mu_e, d = as_expr(mu), domain or s.domain
    v0e = Const(Fraction(repr(float(v0))))
    note = "phi1 = 0; phi2 anchored at x = 0; double integral in v anchored at v0 = %g" % v0

    attempts = []
    for m in (mu_e, numeric_params(mu_e, s.params)):
        F = s.F if m is mu_e else numeric_params(s.F, s.params)
        muF0 = substitute(mul(m, F), {"v": v0e})
        double = _closed_double(m, v0e, s.params)
        if double is not None:
            attempts.append((double, _phi2(muF0, s.params), m))
    m = numeric_params(mu_e, s.params)
    muF0 = substitute(mul(m, numeric_params(s.F, s.params)), {"v": v0e})
    attempts.append((_numeric_double(m, v0e), _phi2(muF0, s.params), m))

    last = None
    for double, phi2, m in attempts:
        L = add(double, phi2)
        hv, ev = _verify(s, L, m, d)
        last = (L, phi2, hv, ev)
        if hv is not None and hv.is_zero and ev.is_zero:
            break
    L, phi2, hv, ev = last
    if hv is None:
        raise LagrangianError("quadrature is singular everywhere on the domain")
    regular = nonvanishing(hessian(L), d, s.params)
    return Lagrangian(L, phi2, dict(s.params), d, "from-multiplier", note, regular, mu_e, ev, hv, label)


def lagrangian_from_integral(s: Sode, I, domain: Optional[Domain] = None, *, label: str = "") -> Lagrangian:
    """L = v * int^v I(x, z)/z^2 dz for a first integral I."""
    if isinstance(I, FirstIntegral):
        if not I.ok:
            raise LagrangianError(f"{I.expr} is not a verified first integral")
        Ie, d = I.expr, domain or I.domain or s.domain
    else:
        Ie, d = as_expr(I), domain or s.domain
    v = Symbol("v")
    kernel = mul(Ie, power(v, -2))
    J = table_antiderivative(kernel, "v", s.params)
    note = "indefinite antiderivative in v; terms phi1(x)*v and constants are gauge"
    closed = J is not None
    if J is None:
        lo, hi = d["v"]
        if lo <= 0 <= hi:
            raise KernelSingularityError("v-interval contains 0; the 1/z^2 kernel is singular there")
        ref = Const(Fraction(repr((lo + hi) / 2)))
        z = fresh_dummy("v", kernel.free_symbols)
        J = integral(substitute(kernel, {"v": Symbol(z)}), z, ref, v)
        note = f"kernel integrated from v = {float(ref):g}; " + note
    L = expand(mul(v, J)) if closed else mul(v, J)  # cancels v * a^2/v, which is removable at v = 0
    ev = check_euler_lagrange(s, L, d)
    regular = nonvanishing(hessian(L), d, s.params)
    return Lagrangian(L, Const(0), dict(s.params), d, "from-integral", note, regular, None, ev, None, label)


def catalog_lagrangian(s: Sode, L, domain: Optional[Domain] = None, *, label: str = "",
                       mu=None, phi2=0) -> Lagrangian:
    """Wrap a given expression as a checked Lagrangian."""
    L = as_expr(L)
    d = domain or s.domain
    ev = check_euler_lagrange(s, L, d)
    hv = None
    if mu is not None:
        hv = zero_test(add(hessian(L), neg(as_expr(mu))), d, s.params, tol=_tol_for(L))
    regular = nonvanishing(hessian(L), d, s.params)
    return Lagrangian(L, as_expr(phi2), dict(s.params), d, "catalog", "", regular,
                      None if mu is None else as_expr(mu), ev, hv, label)


# -- Legendre transform -------------------------------------------------------

_INVERSE = {"atanh": "tanh", "tanh": "atanh", "atan": "tan", "exp": "ln", "ln": "exp"}


def _occurrences(e: Expr, name: str) -> int:
    return sum(1 for n in walk(e) if isinstance(n, Symbol) and n.name == name)


def isolate(lhs: Expr, rhs: Expr, var: str) -> Optional[Expr]:
    """Solve lhs = rhs for ``var`` when it occurs exactly once in ``lhs``."""
    if _occurrences(lhs, var) != 1:
        return None
    target = Symbol(var)
    while lhs != target:
        if isinstance(lhs, Add):
            inner = next(t for t in lhs.terms if t.has(var))
            rhs = add(rhs, neg(add(*(t for t in lhs.terms if t is not inner))))
            lhs = inner
        elif isinstance(lhs, Mul):
            inner = next(f for f in lhs.factors if f.has(var))
            rest = mul(*(f for f in lhs.factors if f is not inner))
            rhs = mul(rhs, power(rest, MINUS_ONE))
            lhs = inner
        elif isinstance(lhs, Pow) and isinstance(lhs.exp, Const) and lhs.exp.is_integer \
                and lhs.exp.value % 2 != 0 and not lhs.exp.has(var):
            n = int(lhs.exp.value)
            if n < 0:
                rhs, n = power(rhs, MINUS_ONE), -n
            if n != 1:
                # real odd root
                rhs = mul(func("sign", rhs), power(func("abs", rhs), Const(Fraction(1, n))))
            lhs = lhs.base
        elif isinstance(lhs, Func) and lhs.name in _INVERSE:
            rhs = func(_INVERSE[lhs.name], rhs)
            lhs = lhs.arg
        else:
            return None
    return rhs


@dataclass(frozen=True)
class Hamiltonian:
    p_of_v: Expr
    v_of_p: Optional[Expr]
    H: Optional[Expr]
    lagrangian: Lagrangian
    domain: Domain
    p_domain: Optional[tuple]
    branch: str
    round_trip_error: float = float("nan")
    identity_error: float = float("nan")
    converged: bool = True
    notes: tuple = field(default_factory=tuple)

    @property
    def symbolic(self) -> bool:
        return self.v_of_p is not None

    def _env(self, x, extra: dict) -> dict:
        env = dict(self.lagrangian.params)
        env["x"] = np.asarray(x, dtype=float)
        env.update(extra)
        return env

    def velocity(self, x, p) -> np.ndarray:
        x, p = np.broadcast_arrays(np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(p, float)))
        if self.v_of_p is not None:
            return evaluate_batch(self.v_of_p, self._env(x, {"p": p})).values
        v, _ = newton_inverse(self.p_of_v, x, p, self.domain["v"], self.lagrangian.params)
        return v

    def evaluate(self, x, p) -> np.ndarray:
        x, p = np.broadcast_arrays(np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(p, float)))
        if self.H is not None and not has_integral(self.H):
            return evaluate_batch(self.H, self._env(x, {"p": p})).values
        v = self.velocity(x, p)
        Lv = evaluate_batch(self.lagrangian.L, self._env(x, {"v": v})).values
        return p * v - Lv


def newton_inverse(p_expr: Expr, x, p, bracket, params, tol: float = NEWTON_TOL, maxit: int = 200):
    """Solve p_expr(x, v) = p for v in ``bracket``, vectorized over points.

    Newton steps that leave the current bracket (or are not finite) are
    replaced by bisection.  Returns (v, converged-mask); unconverged entries
    are nan.
    """
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    dp = differentiate(p_expr, "v")
    env = dict(params)

    def f(v):
        env.update(x=x, v=v)
        return evaluate_batch(p_expr, env).values - p

    def df(v):
        env.update(x=x, v=v)
        return evaluate_batch(dp, env).values

    lo = np.full(x.shape, float(bracket[0]))
    hi = np.full(x.shape, float(bracket[1]))
    flo, fhi = f(lo), f(hi)
    bracketed = np.sign(flo) * np.sign(fhi) <= 0
    v = 0.5 * (lo + hi)
    done = np.zeros(x.shape, dtype=bool)
    for _ in range(maxit):
        fv = f(v)
        same = np.sign(fv) == np.sign(flo)
        lo = np.where(same, v, lo)
        flo = np.where(same, fv, flo)
        hi = np.where(same, hi, v)
        with np.errstate(all="ignore"):
            step = v - fv / df(v)
        bad = ~np.isfinite(step) | (step < np.minimum(lo, hi)) | (step > np.maximum(lo, hi))
        new = np.where(fv == 0, v, np.where(bad, 0.5 * (lo + hi), step))
        conv = np.abs(new - v) <= tol * (1 + np.abs(v))
        v = np.where(done, v, new)
        done |= conv
        if done.all():
            break
    ok = done & bracketed
    return np.where(ok, v, np.nan), ok


def _p_range(p_expr: Expr, d: Domain, params) -> Optional[tuple]:
    """Momenta reachable from every x of the domain (monotone p assumed)."""
    xs = np.linspace(*d["x"], 65)
    lo_v, hi_v = d["v"]
    env = dict(params)
    env["x"] = xs
    a = evaluate_batch(p_expr, {**env, "v": np.full_like(xs, lo_v)})
    b = evaluate_batch(p_expr, {**env, "v": np.full_like(xs, hi_v)})
    ok = a.ok & b.ok
    if not ok.any():
        return None
    mins = np.minimum(a.values, b.values)[ok]
    maxs = np.maximum(a.values, b.values)[ok]
    plo, phi = float(mins.max()), float(maxs.min())
    return (plo, phi) if plo < phi else None


def legendre(L: Lagrangian, d: Optional[Domain] = None, *, n_check: int = 32,
             seed: Optional[int] = 0x5EED) -> Hamiltonian:
    """p = dL/dv, v(p) by isolation or Newton, H = p v(p) - L(x, v(p))."""
    d = d or L.domain
    params = L.params
    hess = hessian(L)
    cert = nonvanishing(hess, d, params)
    if not cert.holds:
        raise LegendreError(f"Lagrangian is not regular on the domain: d2L/dv2 {cert.reason} at {cert.witness}")
    p_expr = differentiate(L.L, "v")
    P = Symbol("p")
    v_of_p = isolate(p_expr, P, "v")
    H = None
    if v_of_p is not None:
        H = add(mul(P, v_of_p), neg(substitute(L.L, {"v": v_of_p})))
    branch = "v in [%g, %g]" % d["v"]
    notes = []

    rng = np.random.default_rng(seed)
    pts = d.sample(n_check, rng)
    env = dict(params)
    env.update(pts)
    pv = evaluate_batch(p_expr, env)
    Lv = evaluate_batch(L.L, env)
    ok = pv.ok & Lv.ok
    xs, vs, ps = pts["x"][ok], pts["v"][ok], pv.values[ok]
    if v_of_p is not None:
        back = evaluate_batch(v_of_p, {**params, "x": xs, "p": ps})
        vb, conv = back.values, back.ok
    else:
        vb, conv = newton_inverse(p_expr, xs, ps, d["v"], params)
        notes.append("v(p) by safeguarded Newton iteration")
    rt = float(np.max(np.abs(vb - vs))) if conv.all() and vs.size else float("inf")
    ham = Hamiltonian(p_expr, v_of_p, H, L, d, _p_range(p_expr, d, params), branch,
                      converged=bool(conv.all()), notes=tuple(notes))
    Hv = ham.evaluate(xs, ps)
    ident = float(np.max(np.abs(Hv - (vs * ps - Lv.values[ok])))) if vs.size else float("inf")
    return Hamiltonian(p_expr, v_of_p, H, L, d, ham.p_domain, branch, rt, ident,
                       bool(conv.all()), tuple(notes))


def hamiltonian_identity(ham: Hamiltonian) -> Expr:
    """H(x, p(v)) - (v p(v) - L); identically zero for a correct symbolic H."""
    if ham.H is None:
        raise LegendreError("no symbolic Hamiltonian")
    v = Symbol("v")
    return add(substitute(ham.H, {"p": ham.p_of_v}), neg(mul(v, ham.p_of_v)), ham.lagrangian.L)
