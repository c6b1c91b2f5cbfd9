"""Brute-force Monte Carlo estimators.

Every estimator draws channel gains straight from the protocol definitions
and shares one sample layout, so two calls with the same seed and L see the
same channels (common random numbers).  Work is cut into fixed chunks of
``CHUNK`` samples; chunk results are folded in chunk order, which makes the
estimate independent of how many threads ran.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .config import ChannelStats, Scenario, SystemConfig, TxKind
from .power import PowerBudget

CHUNK = 1 << 16
MIN_SAMPLES = 10_000
DEFAULT_SEED = 20240611

_GROUPS = ("g_ir", "g_id", "g_is", "g_i", "g_si", "g_ri")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    half_width_95: float
    n_samples: int
    seed: int

    @property
    def std_error(self) -> float:
        return self.half_width_95 / 1.96

    def covers(self, value: float, k: float = 3.0, floor: float = 0.0) -> bool:
        """True when ``value`` is within max(k standard errors, floor)."""
        return abs(self.mean - value) <= max(k * self.std_error, floor)


@dataclass(frozen=True)
class ChannelDraw:
    """Channel power gains for one slot (means already applied)."""

    g_sr: float
    g_rd: float
    g_ir: tuple[float, ...]
    g_id: tuple[float, ...]
    g_is: tuple[float, ...]
    g_i: tuple[float, ...]
    g_si: tuple[float, ...]
    g_ri: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        L = len(self.g_ir)
        for name in _GROUPS:
            v = tuple(float(x) for x in getattr(self, name))
            if name == "g_ri" and not v:
                v = (0.0,) * L
            if len(v) != L:
                raise ValueError(f"{name} has {len(v)} entries, expected {L}")
            object.__setattr__(self, name, v)
        values = [self.g_sr, self.g_rd, *sum((getattr(self, n) for n in _GROUPS), ())]
        if min(values) < 0 or not all(math.isfinite(v) for v in values):
            raise ValueError("channel gains must be finite and nonnegative")

    @property
    def L(self) -> int:
        return len(self.g_ir)

    def as_row(self) -> np.ndarray:
        return np.array([self.g_sr, self.g_rd, *sum((getattr(self, n) for n in _GROUPS), ())])

    @classmethod
    def from_row(cls, row: Sequence[float], L: int) -> "ChannelDraw":
        s = _kernels.slots(L)
        kw = {n: tuple(row[s[n]]) for n in _GROUPS}
        return cls(float(row[0]), float(row[1]), **kw)


def mean_row(stats: ChannelStats, L: int) -> np.ndarray:
    """Per-slot mean gain in the sample layout."""
    groups = (
        stats.lambda_pr,  # PT_i -> SR
        stats.lambda_pd,  # PT_i -> SD
        stats.lambda_ps,  # PT_i -> ST
        stats.lambda_pp,  # PT_i -> PD_i
        stats.lambda_sp,  # ST -> PD_i
        stats.lambda_rp,  # SR -> PD_i
    )
    return np.array([stats.lambda_sr, stats.lambda_rd] + [g for g in groups for _ in range(L)])


class CounterRng:
    """Sequential view of the counter-based stream for one seed."""

    def __init__(self, seed: int, backend=None) -> None:
        self.seed = int(seed)
        self.key = _kernels.stream_key(seed)
        self.counter = 0
        self._backend = backend or _kernels.get_backend()

    def uniforms(self, n: int) -> np.ndarray:
        u = self._backend.uniforms(self.key, self.counter, n)
        self.counter += n
        return u

    def exponentials(self, n: int) -> np.ndarray:
        return -np.log1p(-self.uniforms(n))


def sample_draw(stats: ChannelStats, L: int, rng: CounterRng) -> ChannelDraw:
    """One slot of gains; advances ``rng`` by one sample's worth of words."""
    row = rng.exponentials(_kernels.stride(L)) * mean_row(stats, L)
    return ChannelDraw.from_row(row, L)


def sample_draws(stats: ChannelStats, L: int, n: int, seed: int, first: int = 0, backend=None) -> np.ndarray:
    """Gains for samples ``first .. first+n-1`` as an (n, stride) array."""
    be = backend or _kernels.get_backend()
    width = _kernels.stride(L)
    return be.exp_block(_kernels.stream_key(seed), first, n, width) * mean_row(stats, L)


# ---------------------------------------------------------------- folding


def _chunk_moments(v: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    m = v.mean(axis=0)
    return v.shape[0], m, ((v - m) ** 2).sum(axis=0)


def _combine(a, b):
    na, ma, qa = a
    nb, mb, qb = b
    n = na + nb
    d = mb - ma
    return n, ma + d * (nb / n), qa + qb + d * d * (na * nb / n)


def _run(
    stat: Callable[[np.ndarray], np.ndarray],
    stats: ChannelStats,
    L: int,
    n: int,
    seed: int,
    draws: Iterable[ChannelDraw] | None,
    workers: int,
    backend,
    sinr_p: np.ndarray | None = None,
):
    """Ordered fold of ``stat`` over chunks.  Returns (n, mean, M2).

    With ``sinr_p`` set, ``stat`` receives end-to-end SINRs instead of gain
    blocks, and the backend's fused kernel does the sampling.
    """
    be = backend or _kernels.get_backend()
    if draws is not None:
        rows = [d.as_row() for d in draws]
        if not rows:
            raise ValueError("draws must not be empty")
        blk = np.vstack(rows)
        v = stat(blk) if sinr_p is None else stat(be.e2e_sinr(blk, L, sinr_p))
        return _chunk_moments(np.asarray(v, dtype=float))
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    key = _kernels.stream_key(seed)
    width = _kernels.stride(L)
    scale = mean_row(stats, L)

    def one(c: int):
        first = c * CHUNK
        m = min(CHUNK, n - first)
        if sinr_p is None:
            v = stat(be.exp_block(key, first, m, width) * scale)
        else:
            v = stat(be.sinr_chunk(key, first, m, L, scale, sinr_p))
        return _chunk_moments(np.asarray(v, dtype=float))

    chunks = range(math.ceil(n / CHUNK))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(one, chunks))
    else:
        parts = [one(c) for c in chunks]
    acc = parts[0]
    for p in parts[1:]:
        acc = _combine(acc, p)
    return acc


def _estimate(acc, seed: int) -> McEstimate | list[McEstimate]:
    n, mean, m2 = acc
    var = m2 / max(n - 1, 1)
    hw = 1.96 * np.sqrt(var / n)
    if np.ndim(mean) == 0:
        return McEstimate(float(mean), float(hw), int(n), int(seed))
    return [McEstimate(float(a), float(b), int(n), int(seed)) for a, b in zip(mean, hw)]


# ---------------------------------------------------------------- estimators


def sinr_params(cfg: SystemConfig, budget: PowerBudget, harvest_interference: bool = True) -> np.ndarray:
    p = np.zeros(_kernels.N_PARAMS)
    n0r, n0d = cfg.receiver_noise()
    p[_kernels.P_SCENARIO] = _kernels.SCENARIO_CODE[cfg.scenario.value]
    p[_kernels.P_EH] = 1.0 if cfg.tx_kind is TxKind.EH_ST else 0.0
    p[_kernels.P_H] = 1.0 if harvest_interference else 0.0
    p[_kernels.P_THETA] = cfg.theta
    p[_kernels.P_SM] = budget.P_Sm
    p[_kernels.P_RM] = budget.P_Rm
    p[_kernels.P_PP] = cfg.P_p
    p[_kernels.P_N0R] = n0r
    p[_kernels.P_N0D] = n0d
    return p


def mc_secondary_outage(
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    zeta: float,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    harvest_interference: bool = True,
    draws: Iterable[ChannelDraw] | None = None,
    workers: int = 1,
    backend=None,
) -> McEstimate:
    """Fraction of slots with min(gamma_SR, gamma_SD) < zeta."""
    p = sinr_params(cfg, budget, harvest_interference)
    acc = _run(lambda g: g < zeta, stats, cfg.L, n, seed, draws, workers, backend, p)
    return _estimate(acc, seed)


def mc_secondary_outage_curve(
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    zetas: Sequence[float],
    n: int,
    seed: int = DEFAULT_SEED,
    **kwargs,
) -> list[McEstimate]:
    """Outage at several thresholds on one common sample set."""
    harvest = kwargs.pop("harvest_interference", True)
    backend = kwargs.pop("backend", None)
    z = np.asarray(zetas, dtype=float)
    acc = _run(
        lambda g: g[:, None] < z[None, :],
        stats,
        cfg.L,
        n,
        seed,
        kwargs.pop("draws", None),
        kwargs.pop("workers", 1),
        backend,
        sinr_params(cfg, budget, harvest),
    )
    return _estimate(acc, seed)


def mc_power_outage(
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    which: str = "auto",
    P_th: float | None = None,
    harvest_interference: bool = True,
    draws: Iterable[ChannelDraw] | None = None,
    workers: int = 1,
    backend=None,
) -> McEstimate:
    """Fraction of slots where harvested power falls short of ``P_th``.

    ``which`` selects the node for an EH ST: "st", "sr", or "combined"
    (either node short); "auto" means "combined" for an EH ST and the relay
    otherwise.
    """
    L = cfg.L
    th = cfg.P_th if P_th is None else P_th
    s = _kernels.slots(L)
    eh = cfg.tx_kind is TxKind.EH_ST
    if which == "auto":
        which = "combined" if eh else "sr"
    if which not in ("st", "sr", "combined"):
        raise ValueError(f"unknown power-outage target {which!r}")
    if which != "sr" and not eh:
        raise ValueError("a non-harvesting ST has no power outage of its own")
    h = 0.0 if cfg.scenario is Scenario.NOISE_DOMINANT or not harvest_interference else 1.0

    def stat(b: np.ndarray) -> np.ndarray:
        at_sr = cfg.P_p * b[:, s["g_ir"]].sum(axis=1)
        at_st = cfg.P_p * b[:, s["g_is"]].sum(axis=1)
        if not eh:
            return budget.P_Sm * b[:, 0] + h * at_sr < th
        if which == "st":
            return at_st < th
        if which == "sr":
            return at_sr < th
        return (at_st < th) | (at_sr < th)

    return _estimate(_run(stat, stats, L, n, seed, draws, workers, backend), seed)


def mc_primary_outage(
    cfg: SystemConfig,
    stats: ChannelStats,
    P_interferer: float,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    interferer: str = "st",
    draws: Iterable[ChannelDraw] | None = None,
    workers: int = 1,
    backend=None,
) -> McEstimate:
    """Probability that at least one primary link falls below its rate.

    Link i sees P_p g_i / (P g_xi + N0_pd B / L) with x the ST ("st") or
    the relay ("sr").
    """
    L = cfg.L
    s = _kernels.slots(L)
    cross = {"st": "g_si", "sr": "g_ri"}[interferer]
    noise = cfg.N0_pd * cfg.B / L
    zeta_p = cfg.zeta_p

    def stat(b: np.ndarray) -> np.ndarray:
        sig = cfg.P_p * b[:, s["g_i"]]
        den = P_interferer * b[:, s[cross]] + noise
        # gamma <= zeta_p  <=>  sig <= zeta_p * den, no division needed
        return (sig <= zeta_p * den).any(axis=1)

    return _estimate(_run(stat, stats, L, n, seed, draws, workers, backend), seed)


def mc_ergodic_capacity(
    cfg: SystemConfig,
    stats: ChannelStats,
    budget: PowerBudget,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    harvest_interference: bool = True,
    draws: Iterable[ChannelDraw] | None = None,
    workers: int = 1,
    backend=None,
) -> McEstimate:
    """Sample mean of log2(1 + min(gamma_SR, gamma_SD))."""
    p = sinr_params(cfg, budget, harvest_interference)
    acc = _run(lambda g: np.log1p(g) / math.log(2.0), stats, cfg.L, n, seed, draws, workers, backend, p)
    return _estimate(acc, seed)
