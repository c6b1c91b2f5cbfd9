import math
import os
import subprocess
import sys

import numpy as np
import pytest

from cogrelay import _kernels
from cogrelay.config import Mode, Scenario, SystemConfig, TxKind
from cogrelay.montecarlo import (
    CHUNK,
    ChannelDraw,
    CounterRng,
    McEstimate,
    mc_ergodic_capacity,
    mc_power_outage,
    mc_primary_outage,
    mc_secondary_outage,
    mc_secondary_outage_curve,
    mean_row,
    sample_draw,
    sample_draws,
    sinr_params,
)
from cogrelay.numerics import lower_inc_gamma
from cogrelay.power import PowerBudget, power_budget

SEED = 11

try:
    NUMBA = _kernels.get_backend("numba")
except RuntimeError:  # pragma: no cover
    NUMBA = None
needs_numba = pytest.mark.skipif(NUMBA is None, reason="numba not installed")


def _splitmix_reference(seed, n):
    """Plain-int SplitMix64, written out independently of the kernels."""
    mask = (1 << 64) - 1
    state = _kernels.stream_key(seed)
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        z ^= z >> 31
        out.append((z >> 11) * 2.0**-53)
    return out


def test_uniforms_match_reference():
    assert list(_kernels.NUMPY.uniforms(_kernels.stream_key(5), 0, 50)) == _splitmix_reference(5, 50)


@needs_numba
def test_backends_bit_identical_uniforms():
    key = _kernels.stream_key(SEED)
    for start in (0, 12345, 2**40 + 3):
        assert np.array_equal(NUMBA.uniforms(key, start, 5000), _kernels.NUMPY.uniforms(key, start, 5000))


@needs_numba
def test_backends_agree_on_estimates(stats, cfg, budget):
    a = mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, 100_000, SEED, backend=NUMBA)
    b = mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, 100_000, SEED, backend=_kernels.NUMPY)
    assert a.mean == pytest.approx(b.mean, abs=1e-4)


@pytest.mark.parametrize("L", [1, 3])
@pytest.mark.parametrize("variant", ["in", "nd", "eh"])
def test_fused_sinr_matches_block_path(stats, L, variant):
    cfg = SystemConfig(L=L)
    if variant == "nd":
        cfg = cfg.replace(scenario=Scenario.NOISE_DOMINANT)
    elif variant == "eh":
        cfg = cfg.replace(tx_kind=TxKind.EH_ST)
    p = sinr_params(cfg, power_budget(cfg, stats))
    key, scale = _kernels.stream_key(SEED), mean_row(stats, L)
    backends = [_kernels.NUMPY] + ([NUMBA] if NUMBA is not None else [])
    for be in backends:
        blk = be.exp_block(key, 7, 3000, _kernels.stride(L)) * scale
        assert np.array_equal(be.sinr_chunk(key, 7, 3000, L, scale, p), be.e2e_sinr(blk, L, p))


def test_env_flag_selects_numpy():
    code = "from cogrelay import _kernels as k; print(k.BACKEND.name, k.NUMBA is None)"
    env = {**os.environ, "COGRELAY_DISABLE_NUMBA": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]


def test_counter_addressing_is_random_access():
    key = _kernels.stream_key(SEED)
    whole = _kernels.NUMPY.uniforms(key, 0, 1000)
    assert np.array_equal(whole[300:400], _kernels.NUMPY.uniforms(key, 300, 100))
    rng = CounterRng(SEED, _kernels.NUMPY)
    assert np.array_equal(np.concatenate([rng.uniforms(10), rng.uniforms(5)]), whole[:15])
    assert rng.counter == 15


def test_uniform_range():
    u = _kernels.get_backend().uniforms(_kernels.stream_key(0), 0, 100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005


def test_sample_draw_deterministic(stats):
    a = sample_draw(stats, 2, CounterRng(3))
    b = sample_draw(stats, 2, CounterRng(3))
    assert a == b and a.L == 2
    rng = CounterRng(3)
    sample_draw(stats, 2, rng)
    assert rng.counter == _kernels.stride(2)
    assert sample_draw(stats, 2, rng) != a


def test_sample_draws_match_sequential(stats):
    rng = CounterRng(9)
    rows = np.vstack([sample_draw(stats, 3, rng).as_row() for _ in range(4)])
    np.testing.assert_allclose(sample_draws(stats, 3, 4, 9), rows, rtol=1e-15)


def test_gain_means(stats):
    block = sample_draws(stats, 2, 1_000_000, SEED)
    means = block.mean(axis=0)
    np.testing.assert_allclose(means, mean_row(stats, 2), rtol=0.01)


def test_gamma_sum_cdf(stats):
    L = 3
    block = sample_draws(stats, L, 1_000_000, SEED)
    s = block[:, _kernels.slots(L)["g_ir"]].sum(axis=1) / stats.lambda_pr
    s.sort()
    ecdf = np.arange(1, s.size + 1) / s.size
    grid = s[:: s.size // 2000]
    model = np.array([lower_inc_gamma(L, x) / math.gamma(L) for x in grid])
    assert np.max(np.abs(ecdf[:: s.size // 2000] - model)) < 0.005


def test_channel_draw_validation():
    with pytest.raises(ValueError):
        ChannelDraw(1.0, 1.0, (1.0,), (1.0, 2.0), (1.0,), (1.0,), (1.0,))
    with pytest.raises(ValueError):
        ChannelDraw(-1.0, 1.0, (1.0,), (1.0,), (1.0,), (1.0,), (1.0,))
    d = ChannelDraw(1.0, 2.0, (3.0,), (4.0,), (5.0,), (6.0,), (7.0,))
    assert d.g_ri == (0.0,)
    assert ChannelDraw.from_row(d.as_row(), 1) == d


def test_trivial_secondary(stats, cfg, budget):
    assert mc_secondary_outage(cfg, stats, budget, 0.0, 20_000, SEED).mean == 0.0
    dead = PowerBudget(budget.P_ST, budget.P_SR, 0.0, budget.P_Rm)
    est = mc_secondary_outage(cfg, stats, dead, cfg.zeta_s, 20_000, SEED)
    assert est.mean == 1.0 and est.half_width_95 == 0.0


def test_min_samples(stats, cfg, budget):
    with pytest.raises(ValueError):
        mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, 100, SEED)


def test_trivial_power(stats, cfg, budget):
    assert mc_power_outage(cfg, stats, budget, 20_000, SEED, P_th=0.0).mean == 0.0
    assert mc_power_outage(cfg, stats, budget, 20_000, SEED, P_th=math.inf).mean == 1.0
    with pytest.raises(ValueError):
        mc_power_outage(cfg, stats, budget, 20_000, SEED, which="st")
    with pytest.raises(ValueError):
        mc_power_outage(cfg.replace(tx_kind=TxKind.EH_ST), stats, budget, 20_000, SEED, which="bogus")


def test_trivial_primary(stats):
    cfg = SystemConfig(N0_pd=0.0)
    assert mc_primary_outage(cfg, stats, 0.0, 20_000, SEED).mean == 0.0
    assert mc_primary_outage(cfg, stats, 0.0, 20_000, SEED, interferer="sr").mean == 0.0


def test_primary_l1_closed_form(stats):
    from cogrelay.power import primary_outage_closed_form

    cfg = SystemConfig()
    est = mc_primary_outage(cfg, stats, 5e3, 300_000, SEED)
    assert est.covers(primary_outage_closed_form(5e3, cfg, stats), 4.0)


def test_capacity_trivial(stats, cfg, budget):
    dead = PowerBudget(budget.P_ST, budget.P_SR, 0.0, budget.P_Rm)
    assert mc_ergodic_capacity(cfg, stats, dead, 20_000, SEED).mean == 0.0
    # injected channel that pins gamma_SR = 1 and leaves gamma_SD above it
    nd = cfg.replace(scenario=Scenario.NOISE_DOMINANT)
    b = PowerBudget(1.0, 1.0, 1.0, 1.0)
    pinned = ChannelDraw(1.0, 1e6, (0.3,), (0.2,), (0.1,), (1.0,), (1.0,))
    est = mc_ergodic_capacity(nd, stats, b, 0, SEED, draws=[pinned] * 10)
    assert est.mean == 1.0 and est.n_samples == 10


def test_draw_injection_secondary(stats, cfg, budget):
    strong = ChannelDraw(1e6, 1e6, (0.0,), (0.0,), (0.0,), (1.0,), (1.0,))
    weak = ChannelDraw(0.0, 1e6, (1.0,), (0.0,), (0.0,), (1.0,), (1.0,))
    est = mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, 0, SEED, draws=[strong, weak, weak, strong])
    assert est.mean == 0.5
    with pytest.raises(ValueError):
        mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, 0, SEED, draws=[])


def test_bit_reproducible_and_thread_invariant(stats, cfg, budget):
    n = 3 * CHUNK + 17
    a = mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, n, SEED)
    b = mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, n, SEED)
    c = mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, n, SEED, workers=3)
    assert a == b == c
    assert mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, n, SEED + 1) != a


def test_half_width_shrinks(stats):
    cfg = SystemConfig(L=2)
    b = power_budget(cfg, stats)
    h1 = mc_secondary_outage(cfg, stats, b, cfg.zeta_s, 200_000, SEED).half_width_95
    h2 = mc_secondary_outage(cfg, stats, b, cfg.zeta_s, 400_000, SEED).half_width_95
    assert 1.3 <= h1 / h2 <= 1.5


def test_half_width_definition():
    est = McEstimate(0.25, 1.96 * 0.01, 100, 1)
    assert est.std_error == pytest.approx(0.01)
    assert est.covers(0.27, 3.0) and not est.covers(0.3, 3.0)
    assert est.covers(0.3, 3.0, floor=0.06)


@pytest.mark.parametrize("tx", [TxKind.NON_EH_ST, TxKind.EH_ST])
def test_curve_monotone_on_common_samples(stats, tx):
    cfg = SystemConfig(tx_kind=tx)
    b = power_budget(cfg, stats)
    zs = np.geomspace(1e-3, 1e2, 20)
    curve = mc_secondary_outage_curve(cfg, stats, b, zs, 50_000, SEED)
    means = [e.mean for e in curve]
    assert means == sorted(means)
    single = mc_secondary_outage(cfg, stats, b, zs[7], 50_000, SEED)
    assert single.mean == pytest.approx(curve[7].mean, abs=1e-15)


def test_common_random_numbers(stats):
    # same seed and L -> same channels, so interference harvesting can only help
    cfg = SystemConfig()
    b = power_budget(cfg, stats)
    with_ = mc_secondary_outage(cfg, stats, b, cfg.zeta_s, 100_000, SEED)
    without = mc_secondary_outage(cfg, stats, b, cfg.zeta_s, 100_000, SEED, harvest_interference=False)
    assert with_.mean <= without.mean


def test_delay_tolerant_capacity_reasonable(stats):
    cfg = SystemConfig(mode=Mode.DELAY_TOLERANT)
    b = power_budget(cfg, stats)
    est = mc_ergodic_capacity(cfg, stats, b, 100_000, SEED)
    assert 0.5 < est.mean < 1.2
