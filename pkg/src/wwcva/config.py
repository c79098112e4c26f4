"""Run configuration: sectioned key-value files with strict validation.

Every key has a default matching the reference experiment setup; unknown
sections or keys are hard errors so a config file cannot silently drift
from what the engine actually computes.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .credit import CreditSpec
from .market import SwapMarket

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """Invalid or unknown configuration input."""


# section -> key -> (attribute, default). Tuples mean comma-separated lists.
_SCHEMA = {
    "market": {
        "flat_rate": ("flat_rate", 0.02),
        "normal_vol": ("normal_vol", 0.007),
    },
    "swap": {
        "notional": ("notional", 1.0),
        "tenor": ("tenor", 10.0),
        "freq": ("freq", 4),
        "fixed_rate": ("fixed_rate", "ATM"),
    },
    "credit": {
        "spread_bps": ("spread_bps", (50.0, 100.0, 200.0, 300.0, 500.0, 1000.0)),
        "figure1_spread_bps": ("figure1_spread_bps", 100.0),
        "recovery": ("recovery", 0.4),
    },
    "wwr": {
        "nu": ("nu", (0.1, 0.5, 0.9, 1.0)),
        "days_per_quarter": ("days_per_quarter", 63),
        "buckets": ("buckets", 400),
        "range_sd": ("range_sd", 6.0),
    },
    "hedge": {
        "mean_reversion": ("mean_reversion", 0.03),
        "steps_per_quarter": ("steps_per_quarter", 13),
        "strike_grid": ("strike_grid", 25),
        "strike_tol_bps": ("strike_tol_bps", 1.0),
    },
    "output": {
        "dir": ("out_dir", "out"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    flat_rate: float = 0.02
    normal_vol: float = 0.007
    notional: float = 1.0
    tenor: float = 10.0
    freq: int = 4
    fixed_rate: float | str = "ATM"
    spread_bps: tuple[float, ...] = (50.0, 100.0, 200.0, 300.0, 500.0, 1000.0)
    figure1_spread_bps: float = 100.0
    recovery: float = 0.4
    nu: tuple[float, ...] = (0.1, 0.5, 0.9, 1.0)
    days_per_quarter: int = 63
    buckets: int = 400
    range_sd: float = 6.0
    mean_reversion: float = 0.03
    steps_per_quarter: int = 13
    strike_grid: int = 25
    strike_tol_bps: float = 1.0
    out_dir: str = "out"

    def __post_init__(self):
        if self.tenor <= 0.0:
            raise ConfigError(f"swap.tenor must be positive, got {self.tenor}")
        if self.freq < 1:
            raise ConfigError(f"swap.freq must be at least 1, got {self.freq}")
        if self.notional <= 0.0:
            raise ConfigError(f"swap.notional must be positive, got {self.notional}")
        if self.flat_rate < 0.0:
            raise ConfigError(f"market.flat_rate must be non-negative, got {self.flat_rate}")
        if self.normal_vol < 0.0:
            raise ConfigError(f"market.normal_vol must be non-negative, got {self.normal_vol}")
        if isinstance(self.fixed_rate, str) and self.fixed_rate.upper() != "ATM":
            raise ConfigError(f"swap.fixed_rate must be 'ATM' or a rate, got {self.fixed_rate!r}")
        if len(self.spread_bps) == 0:
            raise ConfigError("credit.spread_bps must be a non-empty list")
        if any(s < 0.0 for s in self.spread_bps) or self.figure1_spread_bps < 0.0:
            raise ConfigError("CDS spreads must be non-negative")
        if not 0.0 <= self.recovery < 1.0:
            raise ConfigError(f"credit.recovery must lie in [0, 1), got {self.recovery}")
        if len(self.nu) == 0:
            raise ConfigError("wwr.nu must be a non-empty list")
        if any(not 0.0 <= v <= 1.0 for v in self.nu):
            raise ConfigError("wwr.nu values must lie in [0, 1]")
        if self.days_per_quarter < 1:
            raise ConfigError("wwr.days_per_quarter must be at least 1")
        if self.buckets < 10:
            raise ConfigError("wwr.buckets must be at least 10")
        if self.range_sd <= 0.0:
            raise ConfigError("wwr.range_sd must be positive")
        if self.mean_reversion <= 0.0:
            raise ConfigError("hedge.mean_reversion must be positive")
        if self.steps_per_quarter < 1:
            raise ConfigError("hedge.steps_per_quarter must be at least 1")
        if self.strike_grid < 3:
            raise ConfigError("hedge.strike_grid must be at least 3")
        if self.strike_tol_bps <= 0.0:
            raise ConfigError("hedge.strike_tol_bps must be positive")

    @property
    def strike_tol(self) -> float:
        return self.strike_tol_bps * 1e-4

    def market(self) -> SwapMarket:
        fixed = None if isinstance(self.fixed_rate, str) else float(self.fixed_rate)
        return SwapMarket.build(
            flat_rate=self.flat_rate,
            normal_vol=self.normal_vol,
            maturity=self.tenor,
            freq=self.freq,
            notional=self.notional,
            fixed_rate=fixed,
        )

    def credit_for(self, spread_bps: float) -> CreditSpec:
        return CreditSpec(cds_spread=spread_bps / 1e4, recovery=self.recovery)

    def digest(self, seed: int) -> str:
        parts = [f"seed={seed}"]
        for f in sorted(fields(self), key=lambda f: f.name):
            parts.append(f"{f.name}={getattr(self, f.name)!r}")
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:12]


def _parse_value(section: str, key: str, raw: str, default):
    try:
        if isinstance(default, tuple):
            items = [tok.strip() for tok in raw.split(",") if tok.strip()]
            return tuple(float(tok) for tok in items)
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw.strip())
        if isinstance(default, float):
            return float(raw.strip())
        if section == "swap" and key == "fixed_rate":
            return raw.strip() if raw.strip().upper() == "ATM" else float(raw.strip())
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"cannot parse [{section}] {key} = {raw!r}: {exc}") from exc


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a RunConfig; ``path=None`` returns the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    overrides = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key [{section}] {key}")
            attr, default = _SCHEMA[section][key]
            if section == "swap" and key == "fixed_rate":
                value = raw.strip() if raw.strip().upper() == "ATM" else _parse_value(
                    section, key, raw, 0.0
                )
            else:
                value = _parse_value(section, key, raw, default)
            overrides[attr] = value
    return RunConfig(**overrides)
