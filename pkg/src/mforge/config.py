"""Sectioned ``key = value`` configuration files for the command line.

    [system]
    name = oscillator1          # a catalog name, or any label together with F
    F = "(k*v^2 - a^2)*x/(1 + k*x^2)"

    [params]
    k = 1
    a = 1

    [domain]
    x = [-2, 2]
    v = [-0.99, 0.99]

    [task]
    mu = "1/(1 + k*x^2)"

Expression values may be quoted; intervals are written ``[lo, hi]``.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from typing import Mapping, Optional

from . import catalog
from .expr import Domain, ParseError, parse
from .geometry import Sode

SECTIONS = ("system", "params", "domain", "task")


class ConfigError(ValueError):
    pass


def _unquote(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def parse_interval(text: str) -> tuple:
    """``[lo, hi]`` (brackets optional) -> (lo, hi)."""
    t = _unquote(text).strip()
    if t.startswith("[") and t.endswith("]"):
        t = t[1:-1]
    parts = [p.strip() for p in t.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"interval must be [lo, hi], got {text!r}")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"interval bounds must be numbers, got {text!r}") from None
    if lo > hi:
        raise ConfigError(f"empty interval {text!r}")
    return lo, hi


def parse_number(name: str, text: str) -> float:
    try:
        return float(_unquote(text))
    except ValueError:
        raise ConfigError(f"parameter {name} must be a number, got {text!r}") from None


@dataclass
class SystemConfig:
    name: str = "oscillator1"
    F: Optional[str] = None
    params: dict = field(default_factory=dict)
    domain: dict = field(default_factory=dict)
    task: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str) -> "SystemConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
        cp.optionxform = str  # keep F, I and parameter names case-sensitive
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed configuration: {exc}") from None
        unknown = set(cp.sections()) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown sections {sorted(unknown)}; expected {list(SECTIONS)}")
        cfg = cls()
        if cp.has_section("system"):
            sec = cp["system"]
            cfg.name = _unquote(sec.get("name", cfg.name))
            if "F" in sec:
                cfg.F = _unquote(sec["F"])
        if cp.has_section("params"):
            cfg.params = {k: parse_number(k, v) for k, v in cp["params"].items()}
        if cp.has_section("domain"):
            cfg.domain = {k: parse_interval(v) for k, v in cp["domain"].items()}
        if cp.has_section("task"):
            cfg.task = {k: _unquote(v) for k, v in cp["task"].items()}
        return cfg

    @classmethod
    def load(cls, path) -> "SystemConfig":
        try:
            with open(path) as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None

    def override(self, *, name=None, F=None, params: Optional[Mapping] = None,
                 domain: Optional[Mapping] = None, task: Optional[Mapping] = None) -> "SystemConfig":
        """A copy with command-line values taking precedence."""
        return SystemConfig(
            name or self.name,
            F if F is not None else self.F,
            {**self.params, **(params or {})},
            {**self.domain, **(domain or {})},
            {**self.task, **{k: v for k, v in (task or {}).items() if v is not None}},
        )

    def sode(self) -> Sode:
        """Catalog system by name, unless F is given; domain entries narrow or replace intervals."""
        if self.F is None:
            if self.name not in catalog.BARE:
                raise ConfigError(f"unknown system {self.name!r} and no F given; "
                                  f"catalog has {sorted(catalog.BARE)}")
            try:
                s = catalog.system(self.name, self.params.get("k"), self.params.get("a"))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            extra = set(self.params) - set(s.params)
            if extra:
                raise ConfigError(f"{self.name} has no parameters {sorted(extra)}")
            d = s.domain.as_dict()
            d.update(self.domain)
            return Sode(s.name, s.F, s.params, Domain(d))
        try:
            F = parse(self.F)
        except ParseError as exc:
            raise ConfigError(f"F does not parse: {exc}") from None
        d = {"x": (-1.0, 1.0), "v": (-1.0, 1.0)}
        d.update(self.domain)
        try:
            return Sode(self.name, F, dict(self.params), Domain(d))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def as_dict(self) -> dict:
        return {"name": self.name, "F": self.F, "params": dict(self.params),
                "domain": {k: list(v) for k, v in self.domain.items()}, "task": dict(self.task)}

    def __str__(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)
