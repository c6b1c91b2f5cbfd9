import math

import pytest

from cogrelay.config import Scenario, SystemConfig, TxKind, db_to_mw
from cogrelay.montecarlo import mc_power_outage, mc_primary_outage
from cogrelay.numerics import lower_inc_gamma
from cogrelay.power import (
    PowerBudget,
    harvested_relay_power,
    max_power_sr,
    max_power_st,
    power_budget,
    power_outage,
    power_outage_eh_combined,
    power_outage_eh_sr,
    power_outage_eh_st,
    power_outage_in,
    power_outage_noise,
    primary_outage_closed_form,
)

SEED = 7


@pytest.mark.parametrize("L", [1, 2, 3])
@pytest.mark.parametrize("theta_p", [0.01, 0.1, 0.5])
def test_max_power_hits_outage_threshold(stats, L, theta_p):
    cfg = SystemConfig(L=L, Theta_p=theta_p)
    for P, lam in ((max_power_st(cfg, stats), stats.lambda_sp), (max_power_sr(cfg, stats), stats.lambda_rp)):
        assert P > 0
        assert primary_outage_closed_form(P, cfg, stats, lam) == pytest.approx(theta_p, rel=1e-9)


def test_st_allowed_more_power_than_sr(stats):
    # ST sits farther from the primary destinations
    cfg = SystemConfig()
    assert max_power_st(cfg, stats) > max_power_sr(cfg, stats)


def test_max_power_zero_when_noise_alone_violates(stats):
    # primary noise outage above Theta_p leaves no room for the secondary
    cfg = SystemConfig(P_p=db_to_mw(-30), Theta_p=0.01)
    assert max_power_st(cfg, stats) == 0.0
    b = power_budget(cfg, stats)
    assert b.P_Sm == b.P_Rm == 0.0


def test_budget_clamps_at_peak(stats):
    cfg = SystemConfig(P_t_st=db_to_mw(0), P_t_sr=db_to_mw(0))
    b = power_budget(cfg, stats)
    assert b.P_Sm == pytest.approx(1e3) and b.P_Rm == pytest.approx(1e3)
    assert b.P_ST > 1e3


def test_primary_outage_increases_with_power(stats):
    cfg = SystemConfig(L=2)
    vals = [primary_outage_closed_form(p, cfg, stats) for p in (0.0, 1e2, 1e4, 1e6)]
    assert vals == sorted(vals)
    assert primary_outage_closed_form(0.0, cfg.replace(N0_pd=0.0), stats) == 0.0


def _budget_with(P_Sm):
    return PowerBudget(P_Sm, P_Sm, P_Sm, P_Sm)


@pytest.mark.parametrize("L", [1, 2, 3])
def test_interference_power_branch_continuity(stats, L):
    cfg = SystemConfig(L=L, P_p=1.0, P_th=0.1)
    equal = cfg.P_p * stats.lambda_pr / stats.lambda_sr
    at = power_outage_in(cfg, stats, _budget_with(equal))
    for eps in (1e-6, 1e-8, 1e-10, 1e-12):
        for s in (1 + eps, 1 - eps):
            assert power_outage_in(cfg, stats, _budget_with(equal * s)) == pytest.approx(at, abs=1e-4)


def test_interference_power_limits(stats):
    cfg = SystemConfig(L=2, P_p=1.0)
    # no ST power: gamma CDF of the interference alone
    p0 = power_outage_in(cfg, stats, _budget_with(0.0))
    assert p0 == pytest.approx(lower_inc_gamma(2, cfg.P_th / (cfg.P_p * stats.lambda_pr)) / 1.0)
    # huge ST power: no outage
    assert power_outage_in(cfg, stats, _budget_with(1e12)) < 1e-9


def test_noise_and_eh_closed_forms(stats):
    cfg = SystemConfig(L=1, P_p=1.0)
    b = _budget_with(1.0)
    assert power_outage_noise(cfg, stats, b) == pytest.approx(1 - math.exp(-cfg.P_th / stats.lambda_sr))
    assert power_outage_eh_st(cfg, stats) == pytest.approx(1 - math.exp(-cfg.P_th / stats.lambda_ps))
    assert power_outage_eh_sr(cfg, stats) == pytest.approx(1 - math.exp(-cfg.P_th / stats.lambda_pr))
    assert power_outage_eh_combined(0.2, 0.5) == pytest.approx(0.6)
    assert power_outage_noise(cfg, stats, _budget_with(0.0)) == 1.0


def test_power_outage_dispatch(stats):
    cfg = SystemConfig(P_p=1.0)
    b = _budget_with(2.0)
    assert power_outage(cfg, stats, b) == power_outage_in(cfg, stats, b)
    assert power_outage(cfg, stats, b, harvest_interference=False) == power_outage_noise(cfg, stats, b)
    nd = cfg.replace(scenario=Scenario.NOISE_DOMINANT)
    assert power_outage(nd, stats, b) == power_outage_noise(nd, stats, b)
    eh = cfg.replace(tx_kind=TxKind.EH_ST)
    assert power_outage(eh, stats, b) == pytest.approx(
        power_outage_eh_combined(power_outage_eh_st(eh, stats), power_outage_eh_sr(eh, stats))
    )


def test_harvested_relay_power():
    b = _budget_with(5.0)
    assert harvested_relay_power(0.5, 4.0, b) == 2.0
    assert harvested_relay_power(2.0, 4.0, b) == 5.0
    with pytest.raises(ValueError):
        harvested_relay_power(-1.0, 1.0, b)


@pytest.mark.parametrize("equal", [False, True])
@pytest.mark.parametrize("L", [1, 2])
def test_interference_power_against_mc(stats, L, equal):
    cfg = SystemConfig(L=L, P_p=1.0, P_th=0.1)
    s_u = cfg.P_p * stats.lambda_pr
    P_Sm = s_u / stats.lambda_sr * (1.0 if equal else 1.7)
    b = _budget_with(P_Sm)
    p = power_outage_in(cfg, stats, b)
    mc = mc_power_outage(cfg, stats, b, 200_000, SEED)
    assert mc.covers(p, 4.0)


def test_eh_power_outage_against_mc(stats):
    cfg = SystemConfig(L=2, P_p=1.0, tx_kind=TxKind.EH_ST)
    b = _budget_with(1.0)
    for which, p in (
        ("st", power_outage_eh_st(cfg, stats)),
        ("sr", power_outage_eh_sr(cfg, stats)),
        ("combined", power_outage(cfg, stats, b)),
    ):
        assert mc_power_outage(cfg, stats, b, 200_000, SEED, which=which).covers(p, 4.0)


def test_primary_constraint_against_mc(stats):
    cfg = SystemConfig(L=2, Theta_p=0.1)
    mc = mc_primary_outage(cfg, stats, max_power_st(cfg, stats), 200_000, SEED)
    assert mc.covers(0.1, 4.0)
