"""Scenario configuration and unit helpers.

All powers are carried internally in linear watts; dBm appears only at the
configuration and reporting boundaries.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """Invalid or malformed scenario configuration."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(watts):
    """Vectorized; accepts scalars or arrays of linear watts."""
    return 10.0 * np.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and protocol parameters of one simulated deployment."""

    area_side_m: float = 200.0
    n_su: int = 32
    n_bands: int = 16
    band_width_hz: float = 10e6
    n_bp_min: int = 1
    n_bp_max: int = 3
    pu_power_dbm: float = 23.0
    leakage_db: float = -20.0
    noise_psd_dbm_hz: float = -174.0
    path_loss_exponent: float = 3.8
    path_loss_constant: float = 10.0 ** 3.453
    shadow_sigma_db: float = 7.9
    d_ref_m: float = 50.0
    velocity_mps: float = 3000.0 / 3600.0  # 3 km/h
    sensing_period_s: float = 2.0
    n_ed: int = 64
    gamma_dbm: float = -107.0
    pu_active_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (self.area_side_m > 0 and math.isfinite(self.area_side_m)):
            raise ConfigError(f"area_side_m must be positive and finite, got {self.area_side_m}")
        if self.n_su < 1:
            raise ConfigError(f"n_su must be >= 1, got {self.n_su}")
        if self.n_bands < 1:
            raise ConfigError(f"n_bands must be >= 1, got {self.n_bands}")
        if not (1 <= self.n_bp_min <= self.n_bp_max <= self.n_bands):
            raise ConfigError(
                f"need 1 <= n_bp_min <= n_bp_max <= n_bands, got "
                f"[{self.n_bp_min}, {self.n_bp_max}] with n_bands={self.n_bands}"
            )
        if not (0.0 <= self.pu_active_prob <= 1.0):
            raise ConfigError(f"pu_active_prob must lie in [0, 1], got {self.pu_active_prob}")
        if self.n_ed < 1:
            raise ConfigError(f"n_ed must be >= 1, got {self.n_ed}")
        if not (self.d_ref_m > 0):
            raise ConfigError(f"d_ref_m must be positive, got {self.d_ref_m}")
        if self.shadow_sigma_db < 0:
            raise ConfigError(f"shadow_sigma_db must be >= 0, got {self.shadow_sigma_db}")
        if self.band_width_hz <= 0:
            raise ConfigError(f"band_width_hz must be positive, got {self.band_width_hz}")
        if self.velocity_mps < 0:
            raise ConfigError(f"velocity_mps must be >= 0, got {self.velocity_mps}")
        if self.sensing_period_s < 0:
            raise ConfigError(f"sensing_period_s must be >= 0, got {self.sensing_period_s}")
        for name in ("pu_power_dbm", "path_loss_exponent", "path_loss_constant"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v}")

    # Derived quantities, all linear.
    @property
    def pu_power_w(self) -> float:
        return dbm_to_watts(self.pu_power_dbm)

    @property
    def leakage_linear(self) -> float:
        return db_to_linear(self.leakage_db)

    @property
    def noise_power_w(self) -> float:
        """Noise power over one band: N_0 * W."""
        return dbm_to_watts(self.noise_psd_dbm_hz) * self.band_width_hz

    @property
    def noise_floor_dbm(self) -> float:
        return self.noise_psd_dbm_hz + 10.0 * math.log10(self.band_width_hz)

    @property
    def step_distance_m(self) -> float:
        return self.velocity_mps * self.sensing_period_s

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**d)


def load_config_file(path: str) -> dict:
    """Read a JSON config file with optional scenario/train/sweep sections."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return raw
