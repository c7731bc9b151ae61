"""Vector fields on named coordinates, second-order ODEs, brackets and jet prolongation.

Jet coordinates are flattened names: the derivatives of a dependent variable
``x`` are ``x_1``, ``x_2``, ... and time is ``t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .expr import (
    Domain, Expr, Symbol, UnboundSymbolError, add, as_expr, differentiate, mul, neg, zero_test,
)
from .expr.nodes import ONE, ZERO

TIME = "t"


class CoordinateMismatch(ValueError):
    pass


def jet_name(name: str, order: int) -> str:
    return name if order == 0 else f"{name}_{order}"


@dataclass(frozen=True)
class VectorField:
    """A vector field sum_i X^i d/dq^i, components aligned with ``coords``."""

    coords: tuple
    components: tuple

    def __post_init__(self):
        if len(self.coords) != len(self.components):
            raise ValueError("one component per coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("duplicate coordinate names")
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "components", tuple(as_expr(c) for c in self.components))

    @classmethod
    def from_map(cls, coords, mapping: Mapping) -> "VectorField":
        """Components from a dict; unlisted coordinates get 0."""
        unknown = set(mapping) - set(coords)
        if unknown:
            raise CoordinateMismatch(f"components for unknown coordinates {sorted(unknown)}")
        return cls(tuple(coords), tuple(as_expr(mapping.get(c, 0)) for c in coords))

    def __getitem__(self, name: str) -> Expr:
        try:
            return self.components[self.coords.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def as_dict(self) -> dict:
        return dict(zip(self.coords, self.components))

    def __call__(self, f) -> Expr:
        """Directional derivative X(f)."""
        f = as_expr(f)
        return add(*(mul(c, differentiate(f, q)) for q, c in zip(self.coords, self.components)
                     if c != ZERO and f.has(q)))

    def scaled(self, g) -> "VectorField":
        g = as_expr(g)
        return VectorField(self.coords, tuple(mul(g, c) for c in self.components))

    def _check(self, other: "VectorField") -> None:
        if self.coords != other.coords:
            raise CoordinateMismatch(f"{self.coords} vs {other.coords}")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.coords, tuple(add(a, b) for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.coords, tuple(add(a, neg(b)) for a, b in zip(self.components, other.components)))

    def with_coords(self, coords) -> "VectorField":
        """Re-express on a coordinate list containing ours (new coordinates get 0)."""
        missing = set(self.coords) - set(coords)
        if missing:
            raise CoordinateMismatch(f"cannot drop nonzero coordinates {sorted(missing)}")
        return VectorField.from_map(coords, self.as_dict())

    def drop(self, name: str) -> "VectorField":
        keep = [i for i, c in enumerate(self.coords) if c != name]
        return VectorField(tuple(self.coords[i] for i in keep), tuple(self.components[i] for i in keep))

    def is_zero(self) -> bool:
        return all(c == ZERO for c in self.components)

    def zero_verdicts(self, d: Domain, params: Optional[Mapping] = None, **kw) -> dict:
        return {q: zero_test(c, d, params, **kw) for q, c in zip(self.coords, self.components)}

    def __str__(self) -> str:
        parts = [f"({c})*d/d{q}" for q, c in zip(self.coords, self.components) if c != ZERO]
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class Sode:
    """x'' = F(x, x') written as the first-order pair x' = v, v' = F(x, v)."""

    name: str
    F: Expr
    params: dict = field(default_factory=dict)
    domain: Optional[Domain] = None

    def __post_init__(self):
        object.__setattr__(self, "F", as_expr(self.F))
        object.__setattr__(self, "params", {k: float(v) for k, v in dict(self.params).items()})
        extra = self.F.free_symbols - {"x", "v"} - set(self.params)
        if extra:
            raise ValueError(f"F has undeclared symbols {sorted(extra)}")
        if self.domain is None:
            object.__setattr__(self, "domain", Domain({"x": (-1, 1), "v": (-1, 1)}))

    def __hash__(self):
        return hash((self.name, self.F, tuple(sorted(self.params.items())), self.domain))

    def with_domain(self, d: Domain) -> "Sode":
        return Sode(self.name, self.F, self.params, d)


@dataclass(frozen=True)
class PointSymmetryAnsatz:
    """xi d/dt + sum_j eta_j d/dq_j on base coordinates (no derivative coordinates)."""

    xi: Expr
    eta: tuple  # ((name, expr), ...) in dependent-variable order
    time: str = TIME

    def __init__(self, xi, eta, time: str = TIME):
        items = tuple(eta.items()) if isinstance(eta, Mapping) else tuple(eta)
        object.__setattr__(self, "xi", as_expr(xi))
        object.__setattr__(self, "eta", tuple((n, as_expr(e)) for n, e in items))
        object.__setattr__(self, "time", time)
        deps = self.dependents
        jet = {jet_name(n, i) for n in deps for i in range(1, 8)}
        for e in (self.xi,) + tuple(e for _, e in self.eta):
            bad = e.free_symbols & jet
            if bad:
                raise ValueError(f"point symmetry coefficients cannot depend on {sorted(bad)}")

    @property
    def dependents(self) -> tuple:
        return tuple(n for n, _ in self.eta)

    def field(self) -> VectorField:
        return VectorField((self.time,) + self.dependents, (self.xi,) + tuple(e for _, e in self.eta))

    @classmethod
    def from_field(cls, X: VectorField, time: str = TIME) -> "PointSymmetryAnsatz":
        d = X.as_dict()
        xi = d.pop(time, ZERO)
        return cls(xi, [(q, d[q]) for q in X.coords if q != time], time)


def sode_to_field(s: Sode, with_time: bool = False) -> VectorField:
    """v d/dx + F d/dv, or d/dt + v d/dx + F d/dv when ``with_time``."""
    if with_time:
        return VectorField((TIME, "x", "v"), (ONE, Symbol("v"), s.F))
    return VectorField(("x", "v"), (Symbol("v"), s.F))


def divergence(X: VectorField, coords=("x", "v")) -> Expr:
    """Divergence relative to the volume form dq1 ^ dq2 ^ ... on ``coords``."""
    if set(X.coords) != set(coords):
        raise CoordinateMismatch(f"field lives on {X.coords}, expected {tuple(coords)}")
    return add(*(differentiate(X[q], q) for q in coords))


def lie_bracket(X: VectorField, Z: VectorField) -> VectorField:
    """[X, Z]^i = X(Z^i) - Z(X^i)."""
    X._check(Z)
    return VectorField(X.coords, tuple(add(X(zc), neg(Z(xc))) for xc, zc in zip(X.components, Z.components)))


def jet_total_derivative(e, dependents, order: int, time: str = TIME) -> Expr:
    """Truncated total derivative d/dt + sum_j sum_{i<order} q_j,i+1 d/dq_j,i."""
    e = as_expr(e)
    out = [differentiate(e, time)]
    for q in dependents:
        for i in range(order):
            name = jet_name(q, i)
            if e.has(name):
                out.append(mul(Symbol(jet_name(q, i + 1)), differentiate(e, name)))
    return add(*out)


def prolong(ansatz: PointSymmetryAnsatz, order: int) -> VectorField:
    """k-th prolongation: phi_(i+1) = D(phi_i) - q_(i+1) D(xi)."""
    if order < 1:
        raise ValueError("prolongation order must be at least 1")
    deps = ansatz.dependents
    coords = [ansatz.time]
    comps = [ansatz.xi]
    Dxi = jet_total_derivative(ansatz.xi, deps, order, ansatz.time)
    per_dep = {}
    for q, eta in ansatz.eta:
        phis = [eta]
        for i in range(order):
            D = jet_total_derivative(phis[-1], deps, order, ansatz.time)
            phis.append(add(D, neg(mul(Symbol(jet_name(q, i + 1)), Dxi))))
        per_dep[q] = phis
    for i in range(order + 1):
        for q in deps:
            coords.append(jet_name(q, i))
            comps.append(per_dep[q][i])
    return VectorField(tuple(coords), tuple(comps))


def total_derivative(e, system) -> Expr:
    """On-shell total derivative: d/dt + v d/dx + F d/dv (+ H d/dw when extended).

    ``system`` is a :class:`Sode` or anything exposing the t-extended field as
    ``.field`` and its parameters as ``.params``.
    """
    e = as_expr(e)
    if isinstance(system, Sode):
        X, params = sode_to_field(system, with_time=True), system.params
    else:
        X, params = system.field, system.params
    unbound = e.free_symbols - set(X.coords) - set(params)
    if unbound:
        raise UnboundSymbolError(sorted(unbound)[0])
    return X(e)
