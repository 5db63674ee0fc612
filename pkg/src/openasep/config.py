"""INI run configuration.

    [params]            ; either the rates ...
    alpha = 0.5
    beta = 0.25
    ; ... or the fan parameters a, b, c, d (q may go with either group)

    [profile]           ; optional, for rate-fn
    breakpoints = 0, 0.5, 1
    values = 0, 0.25, 0.5

    [run]               ; optional defaults for CLI flags (n, seed, mode, ...)
    n = 6
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigFileError, DomainError
from .params import BoundaryRates, FanParams, to_fan

__all__ = ["RunConfig", "load_config", "params_from_mapping", "parse_float_list"]

RATE_KEYS = ("alpha", "beta", "gamma", "delta")
FAN_KEYS = ("a", "b", "c", "d")


@dataclass
class RunConfig:
    params: FanParams | None = None
    rates: BoundaryRates | None = None
    profile: tuple | None = None
    run: dict = field(default_factory=dict)


def _num(key, raw) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigFileError(f"value of {key!r} is not a number: {raw!r}") from None


def parse_float_list(raw: str, what: str = "list") -> list:
    try:
        return [float(t) for t in raw.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise ConfigFileError(f"malformed {what}: {raw!r}") from None


def params_from_mapping(m: dict):
    """(FanParams, BoundaryRates or None) from a flat key -> value mapping."""
    keys = {k for k, v in m.items() if v is not None}
    unknown = keys - set(RATE_KEYS) - set(FAN_KEYS) - {"q"}
    if unknown:
        raise ConfigFileError(f"unknown parameter keys: {sorted(unknown)}")
    has_rates = bool(keys & set(RATE_KEYS))
    has_fan = bool(keys & set(FAN_KEYS))
    if has_rates and has_fan:
        raise ConfigFileError("give either the rates alpha..delta or the fan parameters a..d, not both")
    if not (has_rates or has_fan):
        raise ConfigFileError("no parameters given")
    vals = {k: _num(k, m[k]) for k in keys}
    try:
        if has_rates:
            if "alpha" not in vals or "beta" not in vals:
                raise ConfigFileError("rates need at least alpha and beta")
            rates = BoundaryRates(vals["alpha"], vals["beta"], vals.get("gamma", 0.0),
                                  vals.get("delta", 0.0), vals.get("q", 0.0))
            return to_fan(rates), rates
        if "a" not in vals or "b" not in vals:
            raise ConfigFileError("fan parameters need at least a and b")
        return FanParams(vals["a"], vals["b"], vals.get("c", 0.0), vals.get("d", 0.0),
                         vals.get("q", 0.0)), None
    except DomainError as exc:
        raise ConfigFileError(str(exc)) from None


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        with open(Path(path), encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigFileError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigFileError(f"malformed config {path}: {exc.message.splitlines()[0]}") from None
    known = {"params", "profile", "run"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigFileError(f"unknown config sections: {sorted(extra)}")
    out = RunConfig()
    if cp.has_section("params"):
        out.params, out.rates = params_from_mapping(dict(cp["params"]))
    if cp.has_section("profile"):
        sec = cp["profile"]
        if "breakpoints" not in sec or "values" not in sec:
            raise ConfigFileError("[profile] needs breakpoints and values")
        xs = parse_float_list(sec["breakpoints"], "breakpoints")
        ys = parse_float_list(sec["values"], "values")
        if len(xs) != len(ys):
            raise ConfigFileError("[profile] breakpoints and values differ in length")
        out.profile = (xs, ys)
    if cp.has_section("run"):
        out.run = dict(cp["run"])
    return out
