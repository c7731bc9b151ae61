"""Command line: one JSON report on stdout, a short summary on stderr.

Exit status is 0 when every verdict passes, 1 on a failed verification and 2
on a configuration or parse error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional

from . import catalog
from .config import ConfigError, SystemConfig, parse_interval, parse_number
from .dynamics import DomainExitError, IntegratorConfig, StepUnderflowError, conservation_drift, integrate, write_csv
from .expr import (
    DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL, ParseError, SingularityError, UnboundSymbolError, UnknownFunctionError, mul,
    nonvanishing, parse, power, render, zero_test,
)
from .lagrangian import (
    LagrangianError, LegendreError, catalog_lagrangian, lagrangian_from_integral,
    lagrangian_from_multiplier, legendre,
)
from .multiplier import MultiplierError, check_integral, check_multiplier, integral_from_ratio
from .nonlocal_symmetry import (
    COORDS, NonlocalError, bracket_test, build_symmetry, characteristic_g, characteristic_residual,
    determining_test, extend,
)
from .geometry import PointSymmetryAnsatz

ROUND_TRIP_TOL = 1e-10
IDENTITY_TOL = 1e-9

COMMANDS = ("verify-multiplier", "verify-integral", "derive-lagrangian", "derive-integral", "legendre",
            "nonlocal", "determining", "simulate", "catalog")

USAGE_ERRORS = (ConfigError, ParseError, UnknownFunctionError, UnboundSymbolError, KeyError)
CHECK_ERRORS = (MultiplierError, LagrangianError, LegendreError, NonlocalError, DomainExitError,
                StepUnderflowError, SingularityError)


class UsageError(ValueError):
    pass


class Report:
    """Accumulates verdicts, rendered expressions and diagnostics for one command."""

    def __init__(self, command: str, inputs: dict):
        self.command = command
        self.inputs = inputs
        self.verdicts = {}
        self.expressions = {}
        self.diagnostics = {}
        self.flags = []
        self.error = None

    def verdict(self, name: str, v, passed: Optional[bool] = None) -> bool:
        """Record a Verdict or Certificate (or a plain bool) under ``name``."""
        if isinstance(v, bool):
            entry = {"pass": v}
        else:
            entry = v.as_dict()
            if passed is None:
                passed = v.holds if hasattr(v, "holds") else v.is_zero
            entry["pass"] = bool(passed)
        if passed is not None:
            entry["pass"] = bool(passed)
        self.verdicts[name] = entry
        return entry["pass"]

    def expr(self, name: str, e) -> None:
        self.expressions[name] = e if isinstance(e, str) else render(e)

    @property
    def ok(self) -> bool:
        return self.error is None and all(v["pass"] for v in self.verdicts.values())

    def as_dict(self) -> dict:
        out = {"command": self.command, "inputs": self.inputs, "ok": self.ok, "verdicts": self.verdicts,
               "expressions": self.expressions, "diagnostics": self.diagnostics, "flags": self.flags}
        if self.error is not None:
            out["error"] = self.error
        return _clean(out)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)

    def summary(self) -> str:
        lines = [f"{self.command}: {'PASS' if self.ok else 'FAIL'}"]
        for k, e in self.expressions.items():
            lines.append(f"  {k} = {e}")
        for k, v in self.verdicts.items():
            extra = f" (witness {v['witness']})" if "witness" in v and not v["pass"] else ""
            lines.append(f"  [{'ok' if v['pass'] else 'FAIL'}] {k}{extra}")
        for k, v in self.diagnostics.items():
            text = str(v)
            lines.append(f"  {k}: {text if len(text) <= 160 else '(see the JSON report)'}")
        for f in self.flags:
            lines.append(f"  note: {f}")
        if self.error:
            lines.append(f"  error: {self.error}")
        return "\n".join(lines)


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "item"):  # numpy scalars
        return _clean(obj.item())
    return obj


# -- argument handling ----------------------------------------------------------

def _assignment(text: str) -> tuple:
    if "=" not in text:
        raise UsageError(f"expected NAME=VALUE, got {text!r}")
    name, value = text.split("=", 1)
    return name.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="catalog name (oscillator1, oscillator2, harmonic) or a label for --F")
    common.add_argument("--config", help="configuration file with [system], [params], [domain], [task]")
    common.add_argument("--F", dest="F", help="right-hand side of x'' = F(x, v)")
    common.add_argument("--k", type=float, help="parameter k")
    common.add_argument("--a", type=float, help="parameter a (alpha)")
    common.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--domain", action="append", default=[], metavar="NAME=[LO,HI]")
    common.add_argument("--seed", type=int, help="sampling seed (default: $MFORGE_SEED or 0x5EED)")
    common.add_argument("--samples", type=int, help=f"zero-test sample count (default {DEFAULT_SAMPLES})")
    common.add_argument("--tol", type=float, help=f"zero-test scaled tolerance (default {DEFAULT_TOL:g})")

    ap = argparse.ArgumentParser(prog="mforge", description="Jacobi multipliers, Lagrangians and "
                                 "non-local symmetries of x'' = F(x, x').")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-multiplier", parents=[common], help="check v dmu/dx + d(mu F)/dv = 0")
    p.add_argument("--mu")
    p = sub.add_parser("verify-integral", parents=[common], help="check that I is conserved")
    p.add_argument("--I", dest="I")
    p = sub.add_parser("derive-integral", parents=[common], help="I = mu2/mu1 from two multipliers")
    p.add_argument("--mu1")
    p.add_argument("--mu2")
    p = sub.add_parser("derive-lagrangian", parents=[common], help="L from a multiplier or a first integral")
    p.add_argument("--mu")
    p.add_argument("--I", dest="I")
    p.add_argument("--v0", type=float, help="anchor of the v double integral (default 0)")
    p = sub.add_parser("legendre", parents=[common], help="Hamiltonian of a Lagrangian")
    p.add_argument("--L", dest="L", help="Lagrangian; otherwise derived from --mu")
    p.add_argument("--mu")
    p.add_argument("--v0", type=float)
    p = sub.add_parser("nonlocal", parents=[common], help="Y = g X_H on the cover w' = F h(v)")
    p.add_argument("--h")
    p.add_argument("--G", dest="G", help="G in g = G(w - int h dv); default exp")
    p.add_argument("--w", help="w interval, default [-1, 1]")
    p = sub.add_parser("determining", parents=[common], help="first-order determining residuals of an ansatz")
    p.add_argument("--h")
    p.add_argument("--g", help="use Y = g X_H as the ansatz")
    p.add_argument("--xi", default=None)
    p.add_argument("--eta-x", dest="eta_x", default=None)
    p.add_argument("--eta-v", dest="eta_v", default=None)
    p.add_argument("--eta-w", dest="eta_w", default=None)
    p.add_argument("--w", help="w interval, default [-1, 1]")
    p = sub.add_parser("simulate", parents=[common], help="integrate and monitor a conserved quantity")
    p.add_argument("--x0", type=float)
    p.add_argument("--v0", type=float)
    p.add_argument("--w0", type=float, help="initial w; requires --h")
    p.add_argument("--h", help="integrate the cover w' = F h(v) as well")
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--method", choices=("rk4", "rk45"), default=None)
    p.add_argument("--Q", dest="Q", help="quantity whose drift is reported")
    p.add_argument("--drift-tol", dest="drift_tol", type=float, help="default 1e-8")
    p.add_argument("--out", help="CSV file for the trajectory")
    sub.add_parser("catalog", parents=[common], help="build and certify catalog entries")
    return ap


def resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MFORGE_SEED")
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise UsageError(f"MFORGE_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def resolve_config(args) -> SystemConfig:
    cfg = SystemConfig.load(args.config) if args.config else SystemConfig()
    params = {}
    for text in args.param:
        name, value = _assignment(text)
        params[name] = parse_number(name, value)
    if args.k is not None:
        params["k"] = args.k
    if args.a is not None:
        params["a"] = args.a
    domain = {}
    for text in args.domain:
        name, value = _assignment(text)
        domain[name] = parse_interval(value)
    task = {k: v for k, v in vars(args).items()
            if k not in ("command", "system", "config", "F", "k", "a", "param", "domain", "seed")}
    return cfg.override(name=args.system, F=args.F, params=params, domain=domain, task=task)


def _need(cfg: SystemConfig, key: str, flag: str) -> str:
    value = cfg.task.get(key)
    if value is None or value == "":
        raise UsageError(f"{cfg.name}: missing {flag} (or '{key}' under [task])")
    return value


def _num(cfg: SystemConfig, key: str, default=None):
    value = cfg.task.get(key, default)
    if value is None:
        return None
    return parse_number(key, value) if isinstance(value, str) else float(value)


# -- commands -------------------------------------------------------------------

def cmd_verify_multiplier(cfg, s, rep, zt):
    m = check_multiplier(s, parse(_need(cfg, "mu", "--mu")), label="mu", **zt)
    rep.expr("mu", m.expr)
    rep.verdict("multiplier_residual", m.residual_verdict)
    rep.verdict("nonvanishing", m.certificate)


def cmd_verify_integral(cfg, s, rep, zt):
    fi = check_integral(s, parse(_need(cfg, "I", "--I")), label="I", **zt)
    rep.expr("I", fi.expr)
    rep.expr("residual", fi.residual)
    rep.verdict("integral_residual", fi.verified)


def cmd_derive_integral(cfg, s, rep, zt):
    m1 = check_multiplier(s, parse(_need(cfg, "mu1", "--mu1")), label="mu1", **zt)
    m2 = check_multiplier(s, parse(_need(cfg, "mu2", "--mu2")), label="mu2", **zt)
    rep.verdict("mu1_residual", m1.residual_verdict)
    rep.verdict("mu2_residual", m2.residual_verdict)
    rep.verdict("mu1_nonvanishing", m1.certificate)
    if m1.verified and m2.verified:
        fi = integral_from_ratio(m2, m1, s)
    else:
        if not m2.certificate.holds:
            rep.flags.append(f"mu2 is not sign-definite ({m2.certificate.reason}); the quotient is still conserved "
                             "where mu1 does not vanish")
        fi = check_integral(s, mul(m2.expr, power(m1.expr, -1)), **zt)
    rep.expr("I", fi.expr)
    rep.verdict("integral_residual", fi.verified)


def _lagrangian_report(L, rep):
    rep.expr("L", L.L)
    rep.expr("phi2", L.phi2)
    rep.verdict("euler_lagrange", L.el_verdict)
    if L.hessian_verdict is not None:
        rep.verdict("hessian_equals_mu", L.hessian_verdict)
    rep.verdict("regular", L.regular)
    rep.diagnostics["construction"] = L.source
    rep.diagnostics["gauge"] = L.gauge_note
    if L.numeric:
        rep.flags.append("closed form unavailable; L contains quadrature nodes")


def cmd_derive_lagrangian(cfg, s, rep, zt):
    if cfg.task.get("mu"):
        m = check_multiplier(s, parse(cfg.task["mu"]), label="mu", **zt)
        rep.verdict("multiplier_residual", m.residual_verdict)
        rep.verdict("nonvanishing", m.certificate)
        L = lagrangian_from_multiplier(s, m, v0=_num(cfg, "v0", 0.0), label="L")
    elif cfg.task.get("I"):
        fi = check_integral(s, parse(cfg.task["I"]), label="I", **zt)
        rep.verdict("integral_residual", fi.verified)
        if not fi.ok:
            return
        L = lagrangian_from_integral(s, fi, label="L")
    else:
        raise UsageError("derive-lagrangian needs --mu or --I")
    _lagrangian_report(L, rep)


def cmd_legendre(cfg, s, rep, zt):
    if cfg.task.get("L"):
        L = catalog_lagrangian(s, parse(cfg.task["L"]), label="L")
        rep.expr("L", L.L)
        rep.verdict("euler_lagrange", L.el_verdict)
    elif cfg.task.get("mu"):
        L = lagrangian_from_multiplier(s, parse(cfg.task["mu"]), v0=_num(cfg, "v0", 0.0), label="L")
        _lagrangian_report(L, rep)
    else:
        raise UsageError("legendre needs --L or --mu")
    H = legendre(L, seed=zt["seed"])
    rep.expr("p", H.p_of_v)
    rep.expr("v_of_p", H.v_of_p if H.v_of_p is not None else "numeric (Newton inverse)")
    rep.expr("H", H.H if H.H is not None else "numeric (Newton inverse)")
    rep.diagnostics.update(branch=H.branch, p_domain=list(H.p_domain) if H.p_domain else None,
                           round_trip_error=H.round_trip_error, identity_error=H.identity_error)
    rep.flags.extend(H.notes)
    rep.verdict("converged", H.converged)
    rep.verdict("round_trip", H.round_trip_error <= ROUND_TRIP_TOL)
    rep.verdict("legendre_identity", H.identity_error <= IDENTITY_TOL)


def _extended(cfg, s, default_h=None):
    h = parse(cfg.task.get("h") or default_h or _need(cfg, "h", "--h"))
    w = parse_interval(cfg.task["w"]) if cfg.task.get("w") else (-1.0, 1.0)
    d = s.domain
    if "v" not in cfg.domain and not nonvanishing(h, d.restricted(["v"]), s.params).holds:
        d = catalog.nonlocal_domain(s)
    return extend(s, h, d, w_interval=w), h


def cmd_nonlocal(cfg, s, rep, zt):
    es, h = _extended(cfg, s)
    rep.diagnostics["domain"] = {k: list(v) for k, v in es.domain.intervals}
    G = parse(cfg.task["G"]) if cfg.task.get("G") else None
    g = characteristic_g(h, G, s.params, es.domain)
    rep.expr("h", h)
    rep.expr("g", g)
    rep.verdict("characteristic", zero_test(characteristic_residual(h, g), es.domain, s.params, **zt))
    cand = build_symmetry(es, g, **zt)
    if cand.first_integral is not None:
        rep.verdict("g_first_integral_of_X_H", cand.first_integral)
    for q, c in zip(COORDS, cand.Y.components):
        rep.expr(f"Y[{q}]", c)
    rep.expr("lambda", cand.lam)
    for q, v in cand.verdicts.items():
        rep.verdict(f"bracket_residual[{q}]", v)
    ok, _, f = bracket_test(es, cand.Y, **zt)
    rep.expr("bracket_factor", f)
    rep.verdict("bracket_test", ok)


def cmd_determining(cfg, s, rep, zt):
    es, h = _extended(cfg, s, default_h="1/v")
    rep.expr("h", h)
    if cfg.task.get("g"):
        g = parse(cfg.task["g"])
        Y = es.X_H.scaled(g)
        ansatz = PointSymmetryAnsatz.from_field(Y)
        rep.expr("g", g)
    else:
        parts = {k: cfg.task.get(k) for k in ("xi", "eta_x", "eta_v", "eta_w")}
        if all(v is None for v in parts.values()):
            raise UsageError("determining needs --g or at least one of --xi/--eta-x/--eta-v/--eta-w")
        ex = {k: parse(v) if v else parse("0") for k, v in parts.items()}
        ansatz = PointSymmetryAnsatz(ex["xi"], [("x", ex["eta_x"]), ("v", ex["eta_v"]), ("w", ex["eta_w"])])
        Y = ansatz.field()
    det_ok, res, verdicts = determining_test(es, ansatz, **zt)
    for q, r, v in zip(("x", "v", "w"), res, verdicts):
        rep.expr(f"residual[{q}]", r)
        rep.verdict(f"determining[{q}]", v)
    br_ok, _, _ = bracket_test(es, Y, **zt)
    rep.diagnostics["bracket_test"] = br_ok
    rep.diagnostics["determining_test"] = det_ok
    if br_ok != det_ok:
        rep.flags.append("bracket test and determining test disagree")


def cmd_simulate(cfg, s, rep, zt):
    x0, v0 = _num(cfg, "x0"), _num(cfg, "v0")
    if x0 is None or v0 is None:
        raise UsageError("simulate needs --x0 and --v0")
    ic = IntegratorConfig(t_end=_num(cfg, "t_end", 10.0), method=cfg.task.get("method") or "rk4",
                          step=_num(cfg, "step", 1e-3))
    if cfg.task.get("h"):
        es, _ = _extended(cfg, s)
        traj = integrate(es, [x0, v0, _num(cfg, "w0", 0.0)], ic)
    else:
        traj = integrate(s, [x0, v0], ic)
    rep.diagnostics.update(method=traj.method, steps=len(traj.times) - 1, t_final=float(traj.times[-1]),
                           final_state=dict(zip(traj.coords, (float(y) for y in traj.states[-1]))))
    rep.verdict("completed", not traj.truncated)
    if traj.truncated:
        rep.flags.append(traj.reason)
    Q = parse(cfg.task["Q"]) if cfg.task.get("Q") else None
    if Q is not None:
        drift, _ = conservation_drift(traj, Q, s.params)
        rep.expr("Q", Q)
        rep.diagnostics["relative_drift"] = drift
        tol = _num(cfg, "drift_tol", 1e-8)
        rep.verdict("conservation", drift <= tol)
    if cfg.task.get("out"):
        write_csv(traj, cfg.task["out"], Q, s.params)
        rep.diagnostics["csv"] = cfg.task["out"]


def cmd_catalog(cfg, s, rep, zt):
    names = [s.name] if s is not None else list(catalog.SYSTEMS)
    k, a = cfg.params.get("k"), cfg.params.get("a")
    for name in names:
        try:
            e = catalog.get(name, k, a, certify=False)
        except ValueError as exc:
            rep.flags.append(f"{name}: {exc}")
            continue
        summ = e.summary()
        rep.diagnostics[name] = summ
        for chk, ok in summ["checks"].items():
            rep.verdict(f"{name}:{chk}", bool(ok))
        for lab, ref in summ["references"].items():
            if ref["status"] == catalog.UNVERIFIED:
                rep.flags.append(f"{name}:{lab} is {catalog.UNVERIFIED}: {ref['note']}")


HANDLERS = {
    "verify-multiplier": cmd_verify_multiplier,
    "verify-integral": cmd_verify_integral,
    "derive-integral": cmd_derive_integral,
    "derive-lagrangian": cmd_derive_lagrangian,
    "legendre": cmd_legendre,
    "nonlocal": cmd_nonlocal,
    "determining": cmd_determining,
    "simulate": cmd_simulate,
    "catalog": cmd_catalog,
}


def run(argv=None) -> tuple:
    """(Report, exit code) for a command line; nothing is printed."""
    ap = build_parser()
    args = ap.parse_args(argv)
    rep = Report(args.command, {})
    try:
        seed = resolve_seed(args)
        cfg = resolve_config(args)
        rep.inputs = {"system": cfg.as_dict(), "seed": seed}
        if args.command == "catalog":
            s = cfg.sode() if (args.system or args.config or args.F) else None
        else:
            s = cfg.sode()
        zt = {"seed": seed, "n": int(_num(cfg, "samples", DEFAULT_SAMPLES)), "tol": _num(cfg, "tol", DEFAULT_TOL)}
        if zt["n"] < 1 or zt["tol"] <= 0:
            raise UsageError("--samples must be at least 1 and --tol positive")
        rep.inputs["zero_test"] = zt
        HANDLERS[args.command](cfg, s, rep, zt)
    except (UsageError, ValueError, *USAGE_ERRORS) as exc:
        if isinstance(exc, CHECK_ERRORS):
            rep.error = f"{type(exc).__name__}: {exc}"
            return rep, 1
        rep.error = f"{type(exc).__name__}: {exc}"
        return rep, 2
    except CHECK_ERRORS as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
        return rep, 1
    return rep, 0 if rep.ok else 1


def main(argv=None) -> int:
    rep, code = run(argv)
    sys.stdout.write(rep.to_json() + "\n")
    sys.stderr.write(rep.summary() + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
