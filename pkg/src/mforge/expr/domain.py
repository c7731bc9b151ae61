"""Boxes of closed intervals and reproducible random sampling over them."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .evaluate import DEFAULT_EPS

DEFAULT_SEED = 0x5EED


@dataclass(frozen=True)
class Domain:
    """Per-variable closed intervals plus the singularity tolerance used on them.

    Degenerate intervals (lower == upper) are allowed and pin a variable.
    """

    intervals: tuple
    eps_sing: float = DEFAULT_EPS

    def __init__(self, intervals, eps_sing: float = DEFAULT_EPS):
        items = intervals.items() if isinstance(intervals, Mapping) else intervals
        clean = []
        for name, (lo, hi) in sorted(items):
            lo, hi = float(lo), float(hi)
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ValueError(f"interval for {name!r} must be finite")
            if lo > hi:
                raise ValueError(f"empty interval for {name!r}: [{lo}, {hi}]")
            clean.append((name, (lo, hi)))
        object.__setattr__(self, "intervals", tuple(clean))
        object.__setattr__(self, "eps_sing", float(eps_sing))

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.intervals)

    def __getitem__(self, name: str) -> tuple:
        return dict(self.intervals)[name]

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def as_dict(self) -> dict:
        return dict(self.intervals)

    def with_interval(self, name: str, lo: float, hi: float) -> "Domain":
        d = self.as_dict()
        d[name] = (lo, hi)
        return Domain(d, self.eps_sing)

    def restricted(self, names) -> "Domain":
        return Domain({n: self[n] for n in names}, self.eps_sing)

    def merged(self, other: "Domain") -> "Domain":
        d = self.as_dict()
        d.update(other.as_dict())
        return Domain(d, min(self.eps_sing, other.eps_sing))

    def intersect(self, other: "Domain") -> "Domain":
        d = self.as_dict()
        for name, (lo, hi) in other.intervals:
            if name in d:
                lo0, hi0 = d[name]
                lo, hi = max(lo, lo0), min(hi, hi0)
            d[name] = (lo, hi)
        return Domain(d, min(self.eps_sing, other.eps_sing))

    def contains_point(self, point: Mapping) -> bool:
        return all(lo <= point[n] <= hi for n, (lo, hi) in self.intervals if n in point)

    def sample(self, n: int, rng: np.random.Generator) -> dict:
        """n uniform draws per variable, as arrays keyed by name."""
        return {name: rng.uniform(lo, hi, size=n) if hi > lo else np.full(n, lo)
                for name, (lo, hi) in self.intervals}

    def corners(self) -> dict:
        """Every vertex of the box, as arrays keyed by name."""
        verts = list(itertools.product(*[(lo, hi) for _, (lo, hi) in self.intervals]))
        return {name: np.array([v[i] for v in verts]) for i, name in enumerate(self.names)}


def sample_points(d: Domain, n: int, seed: Optional[int] = DEFAULT_SEED) -> list:
    """``n`` uniform points of ``d`` as dicts; identical for identical seeds."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    cols = d.sample(n, rng)
    return [{name: float(cols[name][i]) for name in d.names} for i in range(n)]
