"""System parameters, unit conversion and topology-derived channel statistics.

All powers are stored internally in milliwatts.  Transmit-power style
quantities quoted in ``dB`` are read as dB relative to 1 W (so ``10 dB`` is
10 W = 1e4 mW) while ``dBm`` quantities (activation threshold, noise) are
relative to 1 mW.
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, ZeroDistanceError


class Scenario(str, Enum):
    INTERFERENCE_PLUS_NOISE = "interference_plus_noise"
    INTERFERENCE_DOMINANT = "interference_dominant"
    NOISE_DOMINANT = "noise_dominant"


class TxKind(str, Enum):
    NON_EH_ST = "non_eh_st"
    EH_ST = "eh_st"


class Mode(str, Enum):
    DELAY_LIMITED = "delay_limited"
    DELAY_TOLERANT = "delay_tolerant"


class Delta1Variant(str, Enum):
    """Which closed form to use for the upper edge of the u-range in the
    interference-plus-noise outage split."""

    PROP2 = "prop2"  # (P_Rm - zeta*theta*N0) / ((1 + zeta) * theta)
    APPENDIX_C = "appendixC"  # (P_Rm - zeta*theta*N0) / (1 + zeta*theta)


def db_to_linear(x_db: float) -> float:
    """Convert a decibel ratio to a linear ratio."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_mw(x_dbm: float) -> float:
    return db_to_linear(x_dbm)


def db_to_mw(x_db: float) -> float:
    """dB relative to 1 W, expressed in mW."""
    return 1e3 * db_to_linear(x_db)


_POWER_RE = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(dBm|dBW|dB|mW|W)?\s*$")


def parse_power(value: Any) -> float:
    """Parse a power given as a number (mW) or a string with a unit suffix.

    >>> parse_power("10 dB")
    10000.0
    >>> parse_power("-10 dBm")
    0.1
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"cannot parse power value {value!r}")
    m = _POWER_RE.match(value)
    if m is None:
        raise ConfigError(f"cannot parse power value {value!r}")
    num = float(m.group(1))
    unit = m.group(2) or "mW"
    if unit == "dBm":
        return dbm_to_mw(num)
    if unit in ("dB", "dBW"):
        return db_to_mw(num)
    if unit == "W":
        return 1e3 * num
    return num


POWER_KEYS = ("P_p", "P_t_st", "P_t_sr", "P_th", "N0_r", "N0_d", "N0_pd")


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of the network.  Defaults reproduce the reference
    operating point used throughout the figures (alpha is swept there, 0.4 is
    only a convenient default)."""

    L: int = 1
    B: float = 1.0
    R_p: float = 0.1
    R_s: float = 0.1
    Theta_p: float = 0.1
    delta: float = 0.3
    P_p: float = db_to_mw(10.0)
    P_t_st: float = db_to_mw(10.0)
    P_t_sr: float = db_to_mw(10.0)
    P_th: float = dbm_to_mw(-10.0)
    N0_r: float = 1.0
    N0_d: float = 1.0
    N0_pd: float = 1.0
    alpha: float = 0.4
    scenario: Scenario = Scenario.INTERFERENCE_PLUS_NOISE
    tx_kind: TxKind = TxKind.NON_EH_ST
    mode: Mode = Mode.DELAY_LIMITED

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "tx_kind", TxKind(self.tx_kind))
        object.__setattr__(self, "mode", Mode(self.mode))
        if int(self.L) != self.L or self.L < 1:
            raise ConfigError(f"L must be a positive integer, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        for name in ("B", "R_p", "R_s", "P_p", "P_t_st", "P_t_sr", "P_th"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive and finite, got {v!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 0.0 < self.Theta_p < 1.0:
            raise ConfigError(f"Theta_p must lie in (0, 1), got {self.Theta_p!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError(f"delta must lie in [0, 1], got {self.delta!r}")
        if not (self.N0_pd >= 0 and math.isfinite(self.N0_pd)):
            raise ConfigError(f"N0_pd must be nonnegative, got {self.N0_pd!r}")
        zero_ok = self.scenario is Scenario.INTERFERENCE_DOMINANT
        for name in ("N0_r", "N0_d"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0 or (v == 0 and not zero_ok):
                raise ConfigError(
                    f"{name} must be positive (zero only when interference dominant), got {v!r}"
                )

    def replace(self, **changes: Any) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    @property
    def theta(self) -> float:
        return 2.0 * self.delta * self.alpha / (1.0 - self.alpha)

    @property
    def zeta_p(self) -> float:
        return 2.0 ** (self.L * self.R_p / self.B) - 1.0

    @property
    def zeta_s(self) -> float:
        return 2.0 ** (self.R_s / self.B) - 1.0

    def receiver_noise(self) -> tuple[float, float]:
        """(N0 at relay, N0 at destination) as seen by the SINR formulas."""
        if self.scenario is Scenario.INTERFERENCE_DOMINANT:
            return 0.0, 0.0
        return self.N0_r, self.N0_d


Point = tuple[float, float]


@dataclass(frozen=True)
class Topology:
    """Node placement on a 2-D grid.  PTs and PDs are co-located clusters."""

    st: Point = (0.0, 0.0)
    sr: Point = (2.0, 0.0)
    sd: Point = (4.0, 0.0)
    pt: Point = (0.0, 2.0)
    pd: Point = (4.0, 2.0)
    rho: float = 2.7

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ConfigError(f"path loss exponent must be positive, got {self.rho!r}")
        for name in ("st", "sr", "sd", "pt", "pd"):
            p = tuple(float(c) for c in getattr(self, name))
            if len(p) != 2:
                raise ConfigError(f"{name} must be an (x, y) pair")
            object.__setattr__(self, name, p)

    def replace(self, **changes: Any) -> "Topology":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ChannelStats:
    """Mean channel power gains of every link class."""

    lambda_pp: float
    lambda_sp: float
    lambda_rp: float
    lambda_sr: float
    lambda_rd: float
    lambda_pr: float
    lambda_pd: float
    lambda_ps: float

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{f.name} must be positive and finite, got {v!r}")


# link name -> (endpoint a, endpoint b)
LINKS: dict[str, tuple[str, str]] = {
    "lambda_pp": ("pt", "pd"),
    "lambda_sp": ("st", "pd"),
    "lambda_rp": ("sr", "pd"),
    "lambda_sr": ("st", "sr"),
    "lambda_rd": ("sr", "sd"),
    "lambda_pr": ("pt", "sr"),
    "lambda_pd": ("pt", "sd"),
    "lambda_ps": ("pt", "st"),
}


def stats_from_topology(topo: Topology) -> ChannelStats:
    """Mean gains d**(-rho) for every link class."""
    gains = {}
    for name, (a, b) in LINKS.items():
        pa, pb = getattr(topo, a), getattr(topo, b)
        d = math.hypot(pa[0] - pb[0], pa[1] - pb[1])
        if d == 0.0:
            raise ZeroDistanceError(f"{a.upper()} and {b.upper()} coincide at {pa}")
        gains[name] = d ** (-topo.rho)
    return ChannelStats(**gains)


@dataclass(frozen=True)
class DerivedConstants:
    zeta_p: float
    zeta_s: float
    theta: float
    omega: float
    phi: float
    delta1: float
    A_const: float


def primary_noise_factor(cfg: SystemConfig, stats: ChannelStats) -> float:
    """exp(-zeta_p N0 B / (L P_p lambda_pp)); N0_pd is a density over the
    per-link band B/L."""
    return math.exp(-cfg.zeta_p * cfg.N0_pd * cfg.B / (cfg.L * cfg.P_p * stats.lambda_pp))


def delta1_value(
    P_Rm: float,
    zeta: float,
    theta: float,
    N0_r: float,
    variant: Delta1Variant | str = Delta1Variant.PROP2,
    harvest_share: float = 1.0,
) -> float:
    """Largest u for which the lower x-limit zeta*(u+N0) still sits below the
    relay clamp point (P_Rm - theta*u)/theta.

    ``harvest_share`` is the weight of interference in the harvested power
    (1 with interference harvesting, 0 when the relay ignores it).
    """
    variant = Delta1Variant(variant)
    num = P_Rm - zeta * theta * N0_r
    if variant is Delta1Variant.APPENDIX_C:
        return num / (1.0 + zeta * theta)
    denom = theta * (zeta + harvest_share)
    return num / denom if denom > 0 else math.inf


def derive_constants(
    cfg: SystemConfig,
    stats: ChannelStats,
    P_Sm: float,
    P_Rm: float | None = None,
    delta1_variant: Delta1Variant | str = Delta1Variant.PROP2,
) -> DerivedConstants:
    """Per-evaluation constants.  ``delta1`` is nan when ``P_Rm`` is omitted."""
    zeta_s = cfg.zeta_s
    s_pr = cfg.P_p * stats.lambda_pr
    x_mean = P_Sm * stats.lambda_sr
    inv_x = 1.0 / x_mean if x_mean > 0 else math.inf
    N0_r, _ = cfg.receiver_noise()
    delta1 = math.nan
    if P_Rm is not None:
        delta1 = delta1_value(P_Rm, zeta_s, cfg.theta, N0_r, delta1_variant)
    return DerivedConstants(
        zeta_p=cfg.zeta_p,
        zeta_s=zeta_s,
        theta=cfg.theta,
        omega=1.0 / s_pr - inv_x,
        phi=1.0 / s_pr + zeta_s * inv_x,
        delta1=delta1,
        A_const=primary_noise_factor(cfg, stats),
    )


# ---------------------------------------------------------------- config files

_CFG_FIELDS = {f.name for f in dataclasses.fields(SystemConfig)}
_TOPO_FIELDS = {f.name for f in dataclasses.fields(Topology)}


def config_from_mapping(data: Mapping[str, Any]) -> tuple[SystemConfig, Topology, dict[str, Any]]:
    """Split a flat key/value document into (config, topology, leftovers).

    Power keys accept numbers in mW or strings like ``"10 dB"`` / ``"-10 dBm"``.
    ``P_t`` and ``N0`` are shorthands that set both peak powers / all noises.
    """
    cfg_kw: dict[str, Any] = {}
    topo_kw: dict[str, Any] = {}
    rest: dict[str, Any] = {}
    for key, value in data.items():
        if key == "P_t":
            cfg_kw["P_t_st"] = cfg_kw["P_t_sr"] = parse_power(value)
        elif key == "N0":
            cfg_kw["N0_r"] = cfg_kw["N0_d"] = cfg_kw["N0_pd"] = parse_power(value)
        elif key in POWER_KEYS:
            cfg_kw[key] = parse_power(value)
        elif key in _CFG_FIELDS:
            cfg_kw[key] = value
        elif key in _TOPO_FIELDS:
            topo_kw[key] = tuple(value) if key != "rho" else float(value)
        else:
            rest[key] = value
    try:
        return SystemConfig(**cfg_kw), Topology(**topo_kw), rest
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> tuple[SystemConfig, Topology, dict[str, Any]]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    return config_from_mapping(data)


def config_to_mapping(cfg: SystemConfig, topo: Topology | None = None) -> dict[str, Any]:
    """Inverse of :func:`config_from_mapping` (powers in mW)."""
    out: dict[str, Any] = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = v.value if isinstance(v, Enum) else v
    if topo is not None:
        for f in dataclasses.fields(topo):
            v = getattr(topo, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
    return out
