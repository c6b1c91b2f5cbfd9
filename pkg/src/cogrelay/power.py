"""Outage-constrained transmit powers and energy-harvesting power outage."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import ChannelStats, Scenario, SystemConfig, TxKind, primary_noise_factor
from .numerics import lower_inc_gamma, power_exp_integral

# relative half-width of the band treated as P_p*lambda_pr == P_Sm*lambda_sr
EQUAL_BRANCH_RTOL = 1e-9


@dataclass(frozen=True)
class PowerBudget:
    P_ST: float
    P_SR: float
    P_Sm: float
    P_Rm: float


def primary_outage_closed_form(
    P_interferer: float,
    cfg: SystemConfig,
    stats: ChannelStats,
    lambda_interferer: float | None = None,
) -> float:
    """Worst-link primary outage when one secondary node transmits with
    ``P_interferer`` over links of mean gain ``lambda_interferer`` (default:
    the ST-PD gain)."""
    lam = stats.lambda_sp if lambda_interferer is None else lambda_interferer
    s_pp = cfg.P_p * stats.lambda_pp
    A = primary_noise_factor(cfg, stats)
    ratio = A * s_pp / (P_interferer * lam * cfg.zeta_p + s_pp)
    return 1.0 - ratio**cfg.L


def _max_power(cfg: SystemConfig, stats: ChannelStats, lam: float) -> float:
    A = primary_noise_factor(cfg, stats)
    slack = A / (1.0 - cfg.Theta_p) ** (1.0 / cfg.L) - 1.0
    return cfg.P_p * stats.lambda_pp / (cfg.zeta_p * lam) * max(slack, 0.0)


def max_power_st(cfg: SystemConfig, stats: ChannelStats) -> float:
    """Largest ST power keeping every primary link's outage at Theta_p."""
    return _max_power(cfg, stats, stats.lambda_sp)


def max_power_sr(cfg: SystemConfig, stats: ChannelStats) -> float:
    return _max_power(cfg, stats, stats.lambda_rp)


def power_budget(cfg: SystemConfig, stats: ChannelStats) -> PowerBudget:
    P_ST = max_power_st(cfg, stats)
    P_SR = max_power_sr(cfg, stats)
    return PowerBudget(P_ST, P_SR, min(P_ST, cfg.P_t_st), min(P_SR, cfg.P_t_sr))


def power_outage_in(cfg: SystemConfig, stats: ChannelStats, budget: PowerBudget) -> float:
    """P(P_Sm |h_sr|^2 + sum_i P_p |h_ir|^2 < P_th): exponential plus gamma."""
    L = cfg.L
    s_u = cfg.P_p * stats.lambda_pr
    s_x = budget.P_Sm * stats.lambda_sr
    if s_x == 0.0:
        return lower_inc_gamma(L, cfg.P_th / s_u) / math.gamma(L)
    if abs(s_u - s_x) <= EQUAL_BRANCH_RTOL * max(s_u, s_x):
        return lower_inc_gamma(L + 1, cfg.P_th / s_u) / math.gamma(L + 1)
    omega = 1.0 / s_u - 1.0 / s_x
    head = lower_inc_gamma(L, cfg.P_th / s_u) / math.gamma(L)
    # exp(-P_th/s_x) * int_0^P_th y^(L-1) exp(-omega y) dy / (Gamma(L) s_u^L)
    tail = power_exp_integral(L, omega, cfg.P_th, log_scale=-cfg.P_th / s_x - L * math.log(s_u))
    return min(max(head - tail / math.gamma(L), 0.0), 1.0)


def power_outage_noise(cfg: SystemConfig, stats: ChannelStats, budget: PowerBudget) -> float:
    """P(P_Sm |h_sr|^2 < P_th)."""
    s_x = budget.P_Sm * stats.lambda_sr
    if s_x == 0.0:
        return 1.0
    return -math.expm1(-cfg.P_th / s_x)


def _gamma_cdf(L: int, x: float) -> float:
    return min(lower_inc_gamma(L, x) / math.gamma(L), 1.0)


def power_outage_eh_st(cfg: SystemConfig, stats: ChannelStats) -> float:
    """P(sum_i P_p |h_is|^2 < P_th) at an energy-harvesting ST."""
    return _gamma_cdf(cfg.L, cfg.P_th / (cfg.P_p * stats.lambda_ps))


def power_outage_eh_sr(cfg: SystemConfig, stats: ChannelStats) -> float:
    """P(sum_i P_p |h_ir|^2 < P_th) at the relay when it harvests from PTs only."""
    return _gamma_cdf(cfg.L, cfg.P_th / (cfg.P_p * stats.lambda_pr))


def power_outage_eh_combined(p_st: float, p_sr: float) -> float:
    return 1.0 - (1.0 - p_st) * (1.0 - p_sr)


def power_outage(
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    harvest_interference: bool = True,
) -> float:
    """Power outage for the configured transmitter kind and scenario.

    With ``harvest_interference=False`` (non-EH ST only) the relay's
    activation is driven by the ST signal alone.
    """
    if cfg.tx_kind is TxKind.EH_ST:
        return power_outage_eh_combined(power_outage_eh_st(cfg, stats), power_outage_eh_sr(cfg, stats))
    if cfg.scenario is Scenario.NOISE_DOMINANT or not harvest_interference:
        return power_outage_noise(cfg, stats, budget)
    return power_outage_in(cfg, stats, budget)


def harvested_relay_power(theta: float, x_term: float, budget: PowerBudget) -> float:
    """Relay transmit power: harvested theta*x_term clamped at P_Rm."""
    if theta < 0 or x_term < 0:
        raise ValueError("theta and x_term must be nonnegative")
    return min(theta * x_term, budget.P_Rm)
