"""Scenario and sweep configuration."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

METHODS = ("robust", "non_robust", "an_split")


class ConfigError(ValueError):
    """Invalid scenario configuration; message names the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SpreadSpec:
    center_deg: float
    width_deg: float = 0.0
    spectrum: str = "uniform"
    std_deg: Optional[float] = None


@dataclass(frozen=True)
class ScenarioConfig:
    n_antennas: int = 128
    n_users: int = 30
    gamma_db: float = 10.0
    # 0 dB default: Eve target enters only the worst-case verification.
    gamma_e_db: float = 0.0
    g: float = 0.5
    # Per-user error ratio override for Eve; None means same as g.
    g_eve: Optional[float] = None
    sigma2: float = 1.0
    sigma2_e: Optional[float] = None
    channel_mode: str = "synthetic"
    spacing_over_wavelength: float = 0.5
    # Squared estimate norm in synthetic mode; None means N.
    channel_norm2: Optional[float] = None
    spreads: Optional[tuple[SpreadSpec, ...]] = None
    spread_width_deg: float = 0.0
    n_quadrature: int = 256
    phase_jitter: float = 0.0
    beams_per_user: int = 1
    error_sampler: str = "ball"
    n_trials: int = 10000
    base_seed: int = 0
    methods: tuple[str, ...] = METHODS
    an_fraction: float = 0.3
    eve_aggregate: str = "mean"
    eve_average: str = "db_of_mean"

    def __post_init__(self):
        if self.spreads is not None and not isinstance(self.spreads, tuple):
            spreads = tuple(s if isinstance(s, SpreadSpec) else SpreadSpec(**s) for s in self.spreads)
            object.__setattr__(self, "spreads", spreads)
        if not isinstance(self.methods, tuple):
            object.__setattr__(self, "methods", tuple(self.methods))
        self.validate()

    def validate(self) -> None:
        if self.n_antennas < 1:
            raise ConfigError("n_antennas", "must be a positive integer")
        if self.n_users < 1:
            raise ConfigError("n_users", "must be a positive integer")
        if self.n_users + 1 > self.n_antennas:
            raise ConfigError("n_users", f"K + 1 = {self.n_users + 1} exceeds N = {self.n_antennas}")
        if not 0.0 <= self.g < 1.0:
            raise ConfigError("g", "must lie in [0, 1)")
        if self.g_eve is not None and not 0.0 <= self.g_eve < 1.0:
            raise ConfigError("g_eve", "must lie in [0, 1)")
        if self.gamma_e_db >= self.gamma_db:
            raise ConfigError("gamma_e_db", "Eve SINR target must be below the user target")
        if self.sigma2 <= 0 or (self.sigma2_e is not None and self.sigma2_e <= 0):
            raise ConfigError("sigma2", "noise variances must be positive")
        if self.channel_mode not in ("synthetic", "physical"):
            raise ConfigError("channel_mode", "must be 'synthetic' or 'physical'")
        if not 0.0 < self.spacing_over_wavelength <= 0.5:
            raise ConfigError("spacing_over_wavelength", "must lie in (0, 0.5]")
        if self.channel_norm2 is not None and self.channel_norm2 <= 0:
            raise ConfigError("channel_norm2", "must be positive")
        if self.spreads is not None and len(self.spreads) != self.n_users + 1:
            raise ConfigError("spreads", "need one spread per user plus one for Eve (last)")
        if self.n_quadrature < 8:
            raise ConfigError("n_quadrature", "must be at least 8")
        if self.beams_per_user < 1 or (self.n_users + 1) * self.beams_per_user > self.n_antennas:
            raise ConfigError("beams_per_user", "not enough DFT beams for all users")
        if self.error_sampler not in ("ball", "sphere"):
            raise ConfigError("error_sampler", "must be 'ball' or 'sphere'")
        if self.n_trials < 1:
            raise ConfigError("n_trials", "must be at least 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError("methods", f"unknown or empty method list {list(self.methods)}")
        if not 0.0 <= self.an_fraction < 1.0:
            raise ConfigError("an_fraction", "must lie in [0, 1)")
        if self.eve_aggregate not in ("mean", "max"):
            raise ConfigError("eve_aggregate", "must be 'mean' or 'max'")
        if self.eve_average not in ("db_of_mean", "mean_of_db"):
            raise ConfigError("eve_average", "must be 'db_of_mean' or 'mean_of_db'")

    @property
    def gamma(self) -> float:
        return db_to_linear(self.gamma_db)

    @property
    def gamma_e(self) -> float:
        return db_to_linear(self.gamma_e_db)

    @property
    def eve_noise_var(self) -> float:
        return self.sigma2 if self.sigma2_e is None else self.sigma2_e

    @property
    def eve_g(self) -> float:
        return self.g if self.g_eve is None else self.g_eve

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        if self.spreads is not None:
            d["spreads"] = [dataclasses.asdict(s) for s in self.spreads]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration field")
        return cls(**d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


SWEEPABLE = {"g": "g", "N": "n_antennas", "K": "n_users"}


@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    values: tuple
    fixed: ScenarioConfig = field(default_factory=ScenarioConfig)

    def __post_init__(self):
        if self.swept_parameter not in SWEEPABLE:
            raise ConfigError("swept_parameter", f"must be one of {sorted(SWEEPABLE)}")
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise ConfigError("values", "empty sweep")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("values", "must be strictly increasing")
        for v in values:
            self.config_at(v)

    def config_at(self, value) -> ScenarioConfig:
        name = SWEEPABLE[self.swept_parameter]
        if name != "g":
            value = int(value)
        return self.fixed.replace(**{name: value})

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        return cls(
            swept_parameter=d["swept_parameter"],
            values=tuple(d["values"]),
            fixed=ScenarioConfig.from_dict(d.get("fixed", {})),
        )
