"""Scenario parameters, node geometry, unit conversions and path loss."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

NODES = ("bs", "ris", "ul", "dl", "eve")


class InvalidGeometryError(ValueError):
    """Raised for zero-length links or unknown node ids."""


class ConfigError(ValueError):
    """Raised for malformed scenario documents."""


def dbm_to_watts(x):
    return np.power(10.0, (np.asarray(x, dtype=float) - 30.0) / 10.0)[()]


def db_to_linear(x):
    return np.power(10.0, np.asarray(x, dtype=float) / 10.0)[()]


def watts_to_dbm(x: float) -> float:
    return 10.0 * math.log10(x) + 30.0


@dataclass(frozen=True)
class SystemParams:
    """Scalar physical and algorithmic parameters of one scenario.

    Powers and variances are linear (watts). ``sigma2_si`` is the per-entry
    variance of the residual self-interference channel.
    """

    n_tx: int = 4
    n_rx: int = 4
    m_ris: int = 40
    p_ul: float = 0.1
    p_max: float = 1.0
    sigma2_b: float = 1e-12
    sigma2_d: float = 1e-12
    sigma2_e: float = 1e-12
    sigma2_si: float = 1e-10
    pl0_db: float = -30.0
    d0: float = 1.0
    exp_ris: float = 2.5
    exp_direct: float = 4.0
    epsilon: float = 1e-3
    k_max: int = 10

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "m_ris", "k_max"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("p_ul", "p_max", "sigma2_b", "sigma2_d", "sigma2_e", "d0", "epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        # zero SI variance is a legitimate limiting case (perfect cancellation)
        if self.sigma2_si < 0:
            raise ValueError("sigma2_si must be >= 0")

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Geometry:
    """2-D node positions in meters."""

    bs: tuple = (0.0, 0.0)
    ris: tuple = (20.0, 10.0)
    ul: tuple = (60.0, 0.0)
    dl: tuple = (40.0, 5.0)
    eve: tuple = (20.0, -5.0)

    def position(self, node: str) -> np.ndarray:
        if node not in NODES:
            raise InvalidGeometryError(f"unknown node id {node!r}")
        return np.asarray(getattr(self, node), dtype=float)


def link_distance(geometry: Geometry, a: str, b: str) -> float:
    return float(np.linalg.norm(geometry.position(a) - geometry.position(b)))


def path_loss_linear(d: float, exponent: float, params: SystemParams) -> float:
    """Large-scale power gain PL0 * (d / d0) ** -exponent."""
    if not d > 0:
        raise InvalidGeometryError(f"link distance must be positive, got {d}")
    return db_to_linear(params.pl0_db) * (d / params.d0) ** (-exponent)


@dataclass(frozen=True)
class Scenario:
    params: SystemParams = field(default_factory=SystemParams)
    geometry: Geometry = field(default_factory=Geometry)


_CONFIG_KEYS = {
    "n_tx", "n_rx", "m_ris", "p_ul_watts", "p_max_dbm", "noise_dbm", "sigma_si_db",
    "pl0_db", "exp_ris", "exp_direct", "epsilon", "k_max", "positions",
}


def default_config() -> dict:
    return {
        "n_tx": 4,
        "n_rx": 4,
        "m_ris": 40,
        "p_ul_watts": 0.1,
        "p_max_dbm": 30.0,
        "noise_dbm": -90.0,
        "sigma_si_db": -100.0,
        "pl0_db": -30.0,
        "exp_ris": 2.5,
        "exp_direct": 4.0,
        "epsilon": 1e-3,
        "k_max": 10,
        "positions": {
            "bs": [0.0, 0.0],
            "ris": [20.0, 10.0],
            "ul": [60.0, 0.0],
            "dl": [40.0, 5.0],
            "eve": [20.0, -5.0],
        },
    }


def scenario_from_config(cfg: dict) -> Scenario:
    """Build a scenario from a config document; missing keys take defaults."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = default_config()
    positions = dict(merged["positions"])
    if "positions" in cfg:
        if not isinstance(cfg["positions"], dict):
            raise ConfigError("positions must be an object")
        bad = set(cfg["positions"]) - set(NODES)
        if bad:
            raise ConfigError(f"unknown position keys: {sorted(bad)}")
        positions.update(cfg["positions"])
    merged.update({k: v for k, v in cfg.items() if k != "positions"})

    try:
        geometry = Geometry(**{n: tuple(float(c) for c in positions[n]) for n in NODES})
        if any(len(getattr(geometry, n)) != 2 for n in NODES):
            raise ConfigError("positions must be [x, y] pairs")
        noise = dbm_to_watts(float(merged["noise_dbm"]))
        params = SystemParams(
            n_tx=int(merged["n_tx"]),
            n_rx=int(merged["n_rx"]),
            m_ris=int(merged["m_ris"]),
            p_ul=float(merged["p_ul_watts"]),
            p_max=dbm_to_watts(float(merged["p_max_dbm"])),
            sigma2_b=noise,
            sigma2_d=noise,
            sigma2_e=noise,
            sigma2_si=db_to_linear(float(merged["sigma_si_db"])),
            pl0_db=float(merged["pl0_db"]),
            exp_ris=float(merged["exp_ris"]),
            exp_direct=float(merged["exp_direct"]),
            epsilon=float(merged["epsilon"]),
            k_max=int(merged["k_max"]),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return Scenario(params, geometry)


def load_scenario(path) -> Scenario:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return scenario_from_config(cfg)
