"""Exact secondary outage, ergodic capacity and throughput.

Notation used in the integrands: ``X`` is the ST signal power received at
the relay, ``U`` the aggregate primary interference at the relay (gamma with
shape L), ``V`` the primary power reaching an energy-harvesting ST.  The
relay forwards with min(theta*harvest, P_Rm); every such kink is handled by
splitting the integration domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import (
    ChannelStats,
    Delta1Variant,
    Mode,
    Scenario,
    SystemConfig,
    Topology,
    TxKind,
    delta1_value,
    stats_from_topology,
)
from .errors import ConfigError, NonMonotoneCdf
from .numerics import (
    DEFAULT_QUAD,
    QuadratureSpec,
    inc_bessel_k_batch,
    integrate_1d,
    integrate_2d_region,
    power_exp_integral,
    upper_inc_gamma,
)
from .power import PowerBudget, power_budget, power_outage

# gamma/exponential tails beyond mean * (shape + _TAIL) carry < 1e-20 mass
_TAIL = 60.0

CAPACITY_QUAD = QuadratureSpec(rel_tol=1e-7, abs_tol=1e-9, max_subdivisions=400)


def _clip01(p: float) -> float:
    return float(min(max(p, 0.0), 1.0))


def _gamma_pdf(u: np.ndarray, L: int, scale: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logu = np.log(u)
    logp = (L - 1) * logu - u / scale - math.lgamma(L) - L * math.log(scale)
    if L == 1:
        logp = -u / scale - math.log(scale)
    return np.exp(logp)


def _sd_success(m, zeta: float, n0d: float, s_pd: float, lam_rd: float, L: int):
    """P(gamma_SD >= zeta | relay power m), averaged over |h_rd|^2 and the
    gamma-distributed interference at SD."""
    m = np.asarray(m, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = zeta / (m * lam_rd)
        out = np.exp(-n0d * k) * (1.0 + s_pd * k) ** (-L)
    return np.where(m > 0, out, 0.0)


# ------------------------------------------------------- interference + noise


def secondary_outage_in(
    zeta: float,
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    delta1_variant: Delta1Variant | str = Delta1Variant.PROP2,
    i1_form: str = "direct",
    harvest_interference: bool = True,
    noise: tuple[float, float] | None = None,
) -> float:
    """P(min(gamma_SR, gamma_SD) < zeta) with a non-EH ST under interference.

    The success probability splits into a double integral over the region
    where the relay runs on harvested power, a closed form where the relay
    is clamped at P_Rm and the u-range stays below ``delta1``, and a closed
    form for u above ``delta1``.  ``i1_form="scaled"`` keeps the x-limits
    divided by P_Sm while leaving the density unscaled (debug only, known
    to disagree).  ``harvest_interference=False`` makes the relay harvest
    the ST signal alone.  ``noise`` overrides (N0 at SR, N0 at SD).
    """
    if zeta <= 0:
        return 0.0
    if budget.P_Sm <= 0 or budget.P_Rm <= 0:
        return 1.0
    n0r, n0d = cfg.receiver_noise() if noise is None else noise
    L = cfg.L
    theta = cfg.theta
    h = 1.0 if harvest_interference else 0.0
    P_Sm, P_Rm = budget.P_Sm, budget.P_Rm
    s_u = cfg.P_p * stats.lambda_pr
    s_x = P_Sm * stats.lambda_sr
    s_pd = cfg.P_p * stats.lambda_pd
    lam_rd = stats.lambda_rd
    gL = math.gamma(L)

    d1 = delta1_value(P_Rm, zeta, theta, n0r, delta1_variant, harvest_share=h)
    clamp = float(_sd_success(P_Rm, zeta, n0d, s_pd, lam_rd, L))

    phi = 1.0 / s_u + zeta / s_x
    lo3 = max(d1, 0.0)
    i3 = clamp * math.exp(-zeta * n0r / s_x) * upper_inc_gamma(L, phi * lo3) / (gL * (s_u * phi) ** L)
    if d1 <= 0:
        return _clip01(1.0 - i3)

    rate = 1.0 / s_u - h / s_x
    i2 = clamp * power_exp_integral(
        L, rate, d1, log_scale=-P_Rm / (theta * s_x) - L * math.log(s_u)
    ) / gL

    u_hi = min(d1, s_u * (L + _TAIL))
    if i1_form == "direct":

        def x_lo(u):
            return zeta * (u + n0r)

        def x_hi(u):
            return np.minimum((P_Rm - theta * h * u) / theta, x_lo(u) + _TAIL * s_x)

        def f(u, x):
            return (
                _gamma_pdf(u, L, s_u)
                * np.exp(-x / s_x) / s_x
                * _sd_success(theta * (x + h * u), zeta, n0d, s_pd, lam_rd, L)
            )

    elif i1_form == "scaled":

        def x_lo(u):
            return zeta * (u + n0r) / P_Sm

        def x_hi(u):
            return np.minimum((P_Rm - theta * h * u) / (theta * P_Sm), x_lo(u) + _TAIL * s_x)

        def f(u, x):
            return (
                _gamma_pdf(u, L, s_u)
                * np.exp(-x / s_x) / s_x
                * _sd_success(theta * (P_Sm * x + h * u), zeta, n0d, s_pd, lam_rd, L)
            )

    else:
        raise ValueError(f"unknown i1_form {i1_form!r}")

    i1, _ = integrate_2d_region(f, 0.0, u_hi, x_lo, x_hi, spec)
    return _clip01(1.0 - (i1 + i2 + i3))


def secondary_outage_id(
    zeta: float,
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    spec: QuadratureSpec = DEFAULT_QUAD,
    **kwargs,
) -> float:
    """Interference-dominant outage: the interference-plus-noise expression
    with both receiver noises set to zero."""
    return secondary_outage_in(zeta, cfg, stats, budget, spec, noise=(0.0, 0.0), **kwargs)


# ------------------------------------------------------------ noise dominant


def secondary_outage_noise(
    zeta: float,
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Outage when primary interference is negligible at SR and SD."""
    if zeta <= 0:
        return 0.0
    if budget.P_Sm <= 0 or budget.P_Rm <= 0:
        return 1.0
    n0r, n0d = cfg.N0_r, cfg.N0_d
    theta = cfg.theta
    P_Sm, P_Rm = budget.P_Sm, budget.P_Rm
    lam_sr, lam_rd = stats.lambda_sr, stats.lambda_rd
    a = zeta * n0r / P_Sm  # |h_sr|^2 needed for the first hop
    b = P_Rm / (theta * P_Sm)  # |h_sr|^2 at which the relay saturates
    clamp_exp = zeta * n0d / (P_Rm * lam_rd)
    if b < a:
        return _clip01(-math.expm1(-(a / lam_sr + clamp_exp)))
    c = zeta * n0d / (theta * P_Sm * lam_rd)
    # int_0^w exp(-x/lam_sr - c/x) dx / lam_sr = (w/lam_sr) K_1(c/w, w/lam_sr)
    k = inc_bessel_k_batch(1.0, np.array([c / b, c / a]), np.array([b / lam_sr, a / lam_sr]), spec)
    success = (b * k[0] - a * k[1]) / lam_sr + math.exp(-b / lam_sr - clamp_exp)
    return _clip01(1.0 - success)


# ------------------------------------------------------------------- EH ST


def secondary_outage_eh_st(
    zeta: float,
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    noise: tuple[float, float] | None = None,
) -> float:
    """Outage when both ST and SR run on harvested primary energy.

    Conditioned on the relay interference U = u both hops are independent;
    the first-hop term is an incomplete Bessel function, and the outer
    integral over u is split at u = P_Rm/theta.
    """
    if zeta <= 0:
        return 0.0
    if budget.P_Sm <= 0 or budget.P_Rm <= 0:
        return 1.0
    n0r, n0d = cfg.receiver_noise() if noise is None else noise
    L = cfg.L
    theta = cfg.theta
    P_Sm, P_Rm = budget.P_Sm, budget.P_Rm
    s_u = cfg.P_p * stats.lambda_pr
    s_v = cfg.P_p * stats.lambda_ps
    s_pd = cfg.P_p * stats.lambda_pd
    lam_sr, lam_rd = stats.lambda_sr, stats.lambda_rd
    gL = math.gamma(L)
    beta = P_Sm / (theta * s_v)
    t2_const = upper_inc_gamma(L, beta) / gL
    t1_const = beta**L / gL

    def success(u: np.ndarray) -> np.ndarray:
        flat = u.ravel()
        kappa = (flat + n0r) * zeta / (P_Sm * lam_sr)
        t1 = t1_const * inc_bessel_k_batch(float(L), kappa, np.full_like(kappa, beta), spec)
        t2 = np.exp(-kappa) * t2_const
        t3 = _sd_success(np.minimum(theta * flat, P_Rm), zeta, n0d, s_pd, lam_rd, L)
        return ((t1 + t2) * t3 * _gamma_pdf(flat, L, s_u)).reshape(u.shape)

    u_cap = s_u * (L + _TAIL)
    knee = P_Rm / theta
    total = 0.0
    for lo, hi in ((0.0, min(knee, u_cap)), (min(knee, u_cap), u_cap)):
        if hi > lo:
            total += integrate_1d(success, lo, hi, spec)[0]
    return _clip01(1.0 - total)


# ---------------------------------------------------------------- dispatch


def secondary_outage(
    zeta: float,
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    delta1_variant: Delta1Variant | str = Delta1Variant.PROP2,
    harvest_interference: bool = True,
) -> float:
    """Secondary outage for the scenario and transmitter kind in ``cfg``."""
    if cfg.tx_kind is TxKind.EH_ST:
        if cfg.scenario is Scenario.NOISE_DOMINANT:
            raise ConfigError("an energy-harvesting ST has no energy source when noise dominates")
        return secondary_outage_eh_st(zeta, cfg, stats, budget, spec)
    if cfg.scenario is Scenario.NOISE_DOMINANT:
        return secondary_outage_noise(zeta, cfg, stats, budget, spec)
    kw = dict(delta1_variant=delta1_variant, harvest_interference=harvest_interference)
    if cfg.scenario is Scenario.INTERFERENCE_DOMINANT:
        return secondary_outage_id(zeta, cfg, stats, budget, spec, **kw)
    return secondary_outage_in(zeta, cfg, stats, budget, spec, **kw)


def ergodic_capacity(
    outage_fn: Callable[[float], float],
    spec: QuadratureSpec = CAPACITY_QUAD,
    tail_tol: float = 1e-6,
    monotone_tol: float = 1e-7,
    t_max: float = 1e15,
) -> float:
    """E[log2(1 + gamma)] from the CDF ``outage_fn(t) = P(gamma < t)``.

    Integrates (1 - F(t)) / (1 + t) after substituting v = ln(1 + t), which
    turns the integral into int (1 - F(e^v - 1)) dv, and truncates where the
    complementary CDF drops below ``tail_tol``.  CDF values are memoised for
    the duration of the call.
    """
    cache: dict[float, float] = {}

    def cdf(t: float) -> float:
        if t not in cache:
            cache[t] = float(outage_fn(t))
        return cache[t]

    def check_monotone() -> None:
        ts = sorted(cache)
        fs = np.array([cache[t] for t in ts])
        drops = np.diff(fs)
        if drops.size and drops.min() < -monotone_tol:
            i = int(np.argmin(drops))
            raise NonMonotoneCdf(f"CDF decreases from {fs[i]!r} at t={ts[i]} to {fs[i + 1]!r} at t={ts[i + 1]}")

    t_cut = 1.0
    while 1.0 - cdf(t_cut) >= tail_tol and t_cut < t_max:
        t_cut *= 4.0
    check_monotone()
    v_cut = math.log1p(t_cut)

    def ccdf(v: np.ndarray) -> np.ndarray:
        return np.array([1.0 - cdf(float(t)) for t in np.expm1(v).ravel()]).reshape(v.shape)

    try:
        value, _ = integrate_1d(ccdf, 0.0, v_cut, spec)
    finally:
        check_monotone()
    return value / math.log(2.0)


def throughput(
    cfg: SystemConfig,
    p_power_outage: float,
    p_secondary_outage: float | None = None,
    capacity: float | None = None,
) -> float:
    """Average secondary throughput in bits/s/Hz.

    ``p_power_outage`` is the overall power outage (for an EH ST the product
    form over both nodes, see :func:`power.power_outage_eh_combined`).
    """
    share = 0.5 * (1.0 - cfg.alpha) * (1.0 - p_power_outage)
    if cfg.mode is Mode.DELAY_LIMITED:
        if p_secondary_outage is None:
            raise ValueError("delay-limited throughput needs the secondary outage")
        return share * (1.0 - p_secondary_outage) * cfg.R_s
    if capacity is None:
        raise ValueError("delay-tolerant throughput needs the ergodic capacity")
    return share * capacity


@dataclass(frozen=True)
class PerformanceReport:
    p_power_outage: float
    p_secondary_outage: float
    ergodic_capacity: float | None
    throughput: float
    budget: PowerBudget
    scenario: Scenario
    tx_kind: TxKind
    mode: Mode

    def as_dict(self) -> dict:
        return {
            "p_power_outage": self.p_power_outage,
            "p_secondary_outage": self.p_secondary_outage,
            "ergodic_capacity": self.ergodic_capacity,
            "throughput": self.throughput,
            "P_ST": self.budget.P_ST,
            "P_SR": self.budget.P_SR,
            "P_Sm": self.budget.P_Sm,
            "P_Rm": self.budget.P_Rm,
            "scenario": self.scenario.value,
            "tx_kind": self.tx_kind.value,
            "mode": self.mode.value,
        }


def evaluate(
    cfg: SystemConfig,
    topo: Topology | ChannelStats,
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    delta1_variant: Delta1Variant | str = Delta1Variant.PROP2,
    harvest_interference: bool = True,
    with_capacity: bool | None = None,
) -> PerformanceReport:
    """Full performance report for one configuration.

    The ergodic capacity is computed in delay-tolerant mode, or whenever
    ``with_capacity`` is true; otherwise it is ``None``.
    """
    stats = topo if isinstance(topo, ChannelStats) else stats_from_topology(topo)
    budget = power_budget(cfg, stats)
    kw = dict(delta1_variant=delta1_variant, harvest_interference=harvest_interference)
    p_e = power_outage(cfg, stats, budget, harvest_interference=harvest_interference)
    p_s = secondary_outage(cfg.zeta_s, cfg, stats, budget, spec, **kw)
    if with_capacity is None:
        with_capacity = cfg.mode is Mode.DELAY_TOLERANT
    cap = None
    if with_capacity:
        if budget.P_Sm <= 0 or budget.P_Rm <= 0:
            cap = 0.0
        else:
            cap = ergodic_capacity(lambda t: secondary_outage(t, cfg, stats, budget, spec, **kw))
    rs = throughput(cfg, p_e, p_s, cap)
    return PerformanceReport(p_e, p_s, cap, rs, budget, cfg.scenario, cfg.tx_kind, cfg.mode)
