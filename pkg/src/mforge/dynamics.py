"""Time stepping of (extended) systems and conservation diagnostics."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .expr import Domain, SingularityError, as_expr, compile_scalar, evaluate_batch
from .geometry import TIME, Sode, VectorField, sode_to_field

# Dormand-Prince 5(4)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


class DomainExitError(ValueError):
    """The initial state lies outside the system's domain."""


class StepUnderflowError(ArithmeticError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    method: str = "rk4"  # "rk4" | "rk45"
    step: float = 1e-3
    atol: float = 1e-10
    rtol: float = 1e-10
    t0: float = 0.0
    min_step: float = 1e-14

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.step <= 0 or self.atol <= 0 or self.rtol <= 0:
            raise ValueError("step and tolerances must be positive")
        if self.t_end <= self.t0:
            raise ValueError("t_end must exceed t0")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n, dim)
    coords: tuple
    method: str
    step: float
    truncated: bool = False
    reason: str = ""
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        if name == TIME:
            return self.times
        return self.states[:, self.coords.index(name)]

    def as_env(self) -> dict:
        env = {c: self.states[:, i] for i, c in enumerate(self.coords)}
        env[TIME] = self.times
        return env


def _resolve(system, params, domain):
    """(field with d/dt, params, domain) from a Sode, an extended system or a field."""
    if isinstance(system, Sode):
        return sode_to_field(system, with_time=True), system.params, domain or system.domain
    if isinstance(system, VectorField):
        return system, dict(params or {}), domain
    return system.field, system.params, domain or system.domain


def integrate(system, x0, cfg: IntegratorConfig, *, params: Optional[Mapping] = None,
              domain: Optional[Domain] = None) -> Trajectory:
    """Integrate from ``x0`` (sequence in coordinate order, or dict) up to ``cfg.t_end``.

    Leaving ``domain`` or hitting a singular right-hand side stops the run; the
    trajectory is returned truncated with ``truncated=True``.
    """
    X, params, d = _resolve(system, params, domain)
    coords = tuple(c for c in X.coords if c != TIME)
    if isinstance(x0, Mapping):
        missing = set(coords) - set(x0)
        if missing:
            raise ValueError(f"initial state misses {sorted(missing)}")
        y0 = [float(x0[c]) for c in coords]
    else:
        y0 = [float(v) for v in x0]
        if len(y0) != len(coords):
            raise ValueError(f"expected {len(coords)} initial values for {coords}")
    inside = _inside_fn(d, coords)
    if not inside(y0):
        raise DomainExitError(f"initial state {dict(zip(coords, y0))} is outside the domain")

    names = (TIME,) + coords
    fns = [compile_scalar(X[c], names, params) for c in coords]

    def rhs(t, y):
        return [f(t, *y) for f in fns]

    try:
        rhs(cfg.t0, y0)
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise SingularityError(f"right-hand side is singular at the initial state: {exc}") from None

    if cfg.method == "rk4":
        ts, ys, trunc, why = _rk4(rhs, y0, cfg, inside)
        step = (cfg.t_end - cfg.t0) / max(1, math.ceil((cfg.t_end - cfg.t0) / cfg.step - 1e-9))
    else:
        ts, ys, trunc, why = _rk45(rhs, y0, cfg, inside)
        step = float("nan")
    return Trajectory(np.asarray(ts), np.asarray(ys).reshape(len(ts), len(coords)), coords,
                      cfg.method, step, trunc, why)


def _inside_fn(d: Optional[Domain], coords):
    if d is None:
        return lambda y: all(math.isfinite(v) for v in y)
    bounds = [(i, *d[c]) for i, c in enumerate(coords) if c in d]

    def inside(y):
        return all(math.isfinite(v) for v in y) and all(lo <= y[i] <= hi for i, lo, hi in bounds)

    return inside


def _rk4(rhs, y0, cfg, inside):
    span = cfg.t_end - cfg.t0
    n = max(1, math.ceil(span / cfg.step - 1e-9))
    h = span / n  # uniform, and lands exactly on t_end
    ts = [cfg.t0]
    ys = [list(y0)]
    y = list(y0)
    dim = len(y)
    for i in range(n):
        t = cfg.t0 + i * h
        try:
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, [y[j] + h / 2 * k1[j] for j in range(dim)])
            k3 = rhs(t + h / 2, [y[j] + h / 2 * k2[j] for j in range(dim)])
            k4 = rhs(t + h, [y[j] + h * k3[j] for j in range(dim)])
        except (ZeroDivisionError, ValueError, OverflowError):
            return ts, ys, True, f"singular right-hand side near t = {t:.17g}"
        y = [y[j] + h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]) for j in range(dim)]
        if not inside(y):
            return ts, ys, True, f"left the domain near t = {t + h:.17g}"
        ts.append(cfg.t0 + (i + 1) * h)
        ys.append(y)
    return ts, ys, False, ""


def _rk45(rhs, y0, cfg, inside):
    t, h = cfg.t0, cfg.step
    y = np.array(y0, dtype=float)
    ts, ys = [t], [y.copy()]
    while t < cfg.t_end:
        h = min(h, cfg.t_end - t)
        if h < cfg.min_step:
            raise StepUnderflowError(f"step size underflow at t = {t:.17g}")
        try:
            k = []
            for i in range(7):
                yi = y + h * sum(a * kj for a, kj in zip(_DP_A[i], k)) if i else y
                k.append(np.array(rhs(t + _DP_C[i] * h, list(yi))))
        except (ZeroDivisionError, ValueError, OverflowError):
            h *= 0.25
            continue
        y5 = y + h * sum(b * kj for b, kj in zip(_DP_B5, k))
        y4 = y + h * sum(b * kj for b, kj in zip(_DP_B4, k))
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.sqrt(np.mean(((y5 - y4) / scale) ** 2)))
        if err <= 1.0:
            if not inside(list(y5)):
                return ts, ys, True, f"left the domain near t = {t + h:.17g}"
            t += h
            y = y5
            ts.append(t)
            ys.append(y.copy())
        h *= min(5.0, max(0.2, 0.9 * (err if err > 0 else 1e-10) ** -0.2))
    return ts, ys, False, ""


def evaluate_along(traj: Trajectory, Q, params: Optional[Mapping] = None) -> np.ndarray:
    Q = as_expr(Q)
    env = dict(params or {})
    env.update(traj.as_env())
    res = evaluate_batch(Q, env)
    if not res.ok.all():
        i = int(np.nonzero(~res.ok)[0][0])
        raise SingularityError(f"{Q} is singular on the trajectory at t = {traj.times[i]:.17g}",
                               res.culprit)
    return np.broadcast_to(res.values, traj.times.shape).copy()


def conservation_drift(traj: Trajectory, Q, params: Optional[Mapping] = None):
    """(max_t |Q(t) - Q(0)| / max(1, |Q(0)|), series of Q)."""
    series = evaluate_along(traj, Q, params)
    q0 = series[0]
    drift = float(np.max(np.abs(series - q0)) / max(1.0, abs(q0)))
    return drift, series


def write_csv(traj: Trajectory, out=None, Q=None, params: Optional[Mapping] = None) -> str:
    """Header ``t,x,v[,w][,Q]``; 17 significant digits.  Returns the text when ``out`` is None."""
    cols = [traj.times] + [traj.states[:, i] for i in range(len(traj.coords))]
    header = [TIME] + list(traj.coords)
    if Q is not None:
        cols.append(evaluate_along(traj, Q, params))
        header.append("Q")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*cols):
        w.writerow(["%.17g" % v for v in row])
    text = buf.getvalue()
    if out is None:
        return text
    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return text


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {name: body[:, i] for i, name in enumerate(header)}
