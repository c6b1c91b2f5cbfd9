"""Parameter sweeps, optimal-alpha search, figure recipes and validation."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .analytics import PerformanceReport, evaluate, secondary_outage
from .config import (
    ChannelStats,
    Delta1Variant,
    Mode,
    Scenario,
    SystemConfig,
    Topology,
    TxKind,
    config_to_mapping,
    db_to_mw,
    parse_power,
    stats_from_topology,
)
from .errors import CogRelayError, ConfigError
from .montecarlo import DEFAULT_SEED, McEstimate, mc_ergodic_capacity, mc_secondary_outage
from .power import power_budget

SWEEPABLE = ("alpha", "Theta_p", "P_p", "L")
ALPHA_GUARD = 1e-6
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class SweepError(CogRelayError):
    """An evaluation inside a sweep failed; carries the grid point."""

    def __init__(self, parameter: str, value: Any, cause: Exception) -> None:
        super().__init__(f"{parameter}={value!r}: {type(cause).__name__}: {cause}")
        self.parameter = parameter
        self.value = value
        self.cause = cause


# ------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    grid: tuple
    base: SystemConfig = field(default_factory=SystemConfig)
    topology: Topology = field(default_factory=Topology)
    compare_oracle: bool = False
    n_mc: int = 1_000_000
    seed: int = DEFAULT_SEED
    delta1_variant: Delta1Variant = Delta1Variant.PROP2
    harvest_interference: bool = True

    def __post_init__(self) -> None:
        if self.swept_parameter not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {self.swept_parameter!r}; choose from {SWEEPABLE}")
        grid = tuple(self.grid)
        if self.swept_parameter == "P_p":
            grid = tuple(parse_power(v) for v in grid)
        if not grid:
            raise ConfigError("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "delta1_variant", Delta1Variant(self.delta1_variant))
        for v in grid:  # domain check up front, before any evaluation
            self.config_at(v)

    def config_at(self, value) -> SystemConfig:
        if self.swept_parameter == "L":
            if int(value) != value:
                raise ConfigError(f"L must be an integer, got {value!r}")
            value = int(value)
        return self.base.replace(**{self.swept_parameter: value})


@dataclass(frozen=True)
class SweepRow:
    value: float
    report: PerformanceReport
    oracle: McEstimate | None = None


def _oracle(cfg: SystemConfig, stats: ChannelStats, spec: SweepSpec) -> McEstimate:
    budget = power_budget(cfg, stats)
    if cfg.mode is Mode.DELAY_TOLERANT:
        return mc_ergodic_capacity(
            cfg, stats, budget, spec.n_mc, spec.seed, harvest_interference=spec.harvest_interference
        )
    return mc_secondary_outage(
        cfg, stats, budget, cfg.zeta_s, spec.n_mc, spec.seed, harvest_interference=spec.harvest_interference
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Evaluate every grid point; rows come back in grid order.

    The oracle column holds the Monte Carlo secondary outage (delay-limited)
    or ergodic capacity (delay-tolerant).
    """
    stats = stats_from_topology(spec.topology)

    def one(value) -> SweepRow:
        cfg = spec.config_at(value)
        try:
            rep = evaluate(
                cfg,
                stats,
                delta1_variant=spec.delta1_variant,
                harvest_interference=spec.harvest_interference,
            )
            mc = _oracle(cfg, stats, spec) if spec.compare_oracle else None
        except CogRelayError as exc:
            raise SweepError(spec.swept_parameter, value, exc) from exc
        return SweepRow(value, rep, mc)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, spec.grid))
    return [one(v) for v in spec.grid]


SWEEP_COLUMNS = (
    "throughput",
    "p_power_outage",
    "p_secondary_outage",
    "ergodic_capacity",
    "P_ST",
    "P_SR",
    "P_Sm",
    "P_Rm",
)


def sweep_table(spec: SweepSpec, rows: Sequence[SweepRow]) -> tuple[list[str], list[list]]:
    header = [spec.swept_parameter, *SWEEP_COLUMNS]
    if spec.compare_oracle:
        header += ["mc_mean", "mc_half_width_95", "mc_samples"]
    body = []
    for r in rows:
        d = r.report.as_dict()
        line = [r.value, *(d[c] for c in SWEEP_COLUMNS)]
        if spec.compare_oracle:
            line += [r.oracle.mean, r.oracle.half_width_95, r.oracle.n_samples]
        body.append(line)
    return header, body


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str | Path | None, header: Sequence[str], rows: Sequence[Sequence], comments: dict | None = None) -> str:
    """Write ``#``-prefixed comment lines, a header, then rows.  Returns the
    text; writes it to ``path`` unless that is None."""
    buf = io.StringIO()
    for k, v in (comments or {}).items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# --------------------------------------------------------------- optimiser


@dataclass(frozen=True)
class OptAlphaResult:
    alpha_star: float
    throughput_star: float
    evaluations: int


def _golden_max(f: Callable[[float], float], a: float, b: float, tol: float) -> tuple[float, float, int]:
    """Golden-section search for a maximum of ``f`` on [a, b]."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while b - a > tol:
        if fc >= fd:  # ties move left, towards the smaller alpha
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        n += 1
    return (c, fc, n) if fc >= fd else (d, fd, n)


def throughput_objective(
    base: SystemConfig,
    topo: Topology | ChannelStats,
    delta1_variant: Delta1Variant | str = Delta1Variant.PROP2,
    harvest_interference: bool = True,
) -> Callable[[float], float]:
    stats = topo if isinstance(topo, ChannelStats) else stats_from_topology(topo)

    def f(alpha: float) -> float:
        cfg = base.replace(alpha=alpha)
        return evaluate(
            cfg, stats, delta1_variant=delta1_variant, harvest_interference=harvest_interference
        ).throughput

    return f


def find_optimal_alpha(
    base: SystemConfig,
    topo: Topology | ChannelStats | None = None,
    grid_n: int = 19,
    refine_tol: float = 1e-4,
    *,
    objective: Callable[[float], float] | None = None,
    delta1_variant: Delta1Variant | str = Delta1Variant.PROP2,
    harvest_interference: bool = True,
) -> OptAlphaResult:
    """Coarse scan of alpha = k/(grid_n+1), then golden-section refinement
    on the bracket around the best grid point.

    Grid values within ``refine_tol`` of the best count as ties and the
    smallest alpha among them wins.  ``objective`` replaces the analytic
    throughput (used for testing).
    """
    if grid_n < 9:
        raise ValueError(f"grid_n must be at least 9, got {grid_n}")
    if objective is None:
        objective = throughput_objective(base, topo or Topology(), delta1_variant, harvest_interference)
    grid = [k / (grid_n + 1) for k in range(1, grid_n + 1)]
    vals = [objective(a) for a in grid]
    best = max(vals)
    k = next(i for i, v in enumerate(vals) if v >= best - refine_tol)
    lo = grid[k - 1] if k > 0 else ALPHA_GUARD
    hi = grid[k + 1] if k + 1 < grid_n else 1.0 - ALPHA_GUARD
    a_ref, v_ref, n_ref = _golden_max(objective, lo, hi, refine_tol)
    if v_ref > vals[k]:
        return OptAlphaResult(a_ref, v_ref, grid_n + n_ref)
    return OptAlphaResult(grid[k], vals[k], grid_n + n_ref)


# ----------------------------------------------------------------- figures

ALPHA_GRID = tuple(round(0.1 * k, 10) for k in range(1, 10))
THETA_GRID = tuple(float(f"{v:.3g}") for v in np.geomspace(1e-3, 0.3, 12))
PP_GRID_DB = tuple(range(-30, 21, 5))
FIGURES = tuple(f"fig{i}" for i in range(3, 12))


def _fig_alpha(fig: str) -> list[tuple[str, SweepSpec]]:
    out = []
    if fig in ("fig3", "fig4"):
        mode = Mode.DELAY_LIMITED if fig == "fig3" else Mode.DELAY_TOLERANT
        for L in (1, 2, 3):
            base = SystemConfig(L=L, mode=mode)
            out.append((f"L{L}_interference_eh", SweepSpec("alpha", ALPHA_GRID, base)))
            out.append(
                (f"L{L}_no_interference_eh", SweepSpec("alpha", ALPHA_GRID, base, harvest_interference=False))
            )
    else:  # fig5: both nodes harvest vs a mains-powered ST whose relay ignores interference
        for L in (1, 2, 3):
            eh = SystemConfig(L=L, tx_kind=TxKind.EH_ST)
            out.append((f"L{L}_eh_st", SweepSpec("alpha", ALPHA_GRID, eh)))
            out.append(
                (f"L{L}_no_interference_eh", SweepSpec("alpha", ALPHA_GRID, SystemConfig(L=L), harvest_interference=False))
            )
    return out


def _opt_curves(fig: str) -> list[tuple[str, SystemConfig]]:
    if fig in ("fig6", "fig7", "fig8"):
        pts = {"fig6": (0.0, 10.0), "fig7": (0.0,), "fig8": (10.0,)}[fig]
        return [
            (f"L{L}_Pt{int(p)}dB", SystemConfig(L=L, P_t_st=db_to_mw(p), P_t_sr=db_to_mw(p)))
            for L in (1, 2)
            for p in pts
        ]
    Ls = (1,) if fig == "fig9" else (2,)
    return [
        (f"L{L}_Pt{int(p)}dB", SystemConfig(L=L, tx_kind=TxKind.EH_ST, P_t_st=db_to_mw(p), P_t_sr=db_to_mw(p)))
        for L in Ls
        for p in (0.0, 10.0)
    ]


FIG11_TOPOLOGY = Topology(pt=(1.0, 3.0))


def optimal_alpha_table(base: SystemConfig, topo: Topology, thetas: Sequence[float], grid_n: int = 19):
    stats = stats_from_topology(topo)
    rows = []
    for th in thetas:
        cfg = base.replace(Theta_p=th)
        res = find_optimal_alpha(cfg, stats, grid_n)
        b = power_budget(cfg, stats)
        rows.append([th, res.alpha_star, res.throughput_star, b.P_ST, b.P_SR, res.evaluations])
    return ["Theta_p", "alpha_star", "throughput_star", "P_ST", "P_SR", "evaluations"], rows


def figure(
    fig: str,
    out_dir: str | Path,
    *,
    oracle: bool = False,
    n_mc: int = 100_000,
    seed: int = DEFAULT_SEED,
) -> list[Path]:
    """Write one CSV per curve plus ``manifest.json`` into ``out_dir``."""
    if fig not in FIGURES:
        raise ConfigError(f"unknown figure {fig!r}; choose from {', '.join(FIGURES)}")
    out = Path(out_dir)
    curves: list[tuple[str, list[str], list[list], dict]] = []

    if fig in ("fig3", "fig4", "fig5"):
        for name, spec in _fig_alpha(fig):
            spec = SweepSpec(
                spec.swept_parameter,
                spec.grid,
                spec.base,
                spec.topology,
                oracle,
                n_mc,
                seed,
                harvest_interference=spec.harvest_interference,
            )
            header, rows = sweep_table(spec, run_sweep(spec))
            meta = config_to_mapping(spec.base) | {"harvest_interference": spec.harvest_interference}
            curves.append((name, header, rows, meta))
    elif fig == "fig11":
        base = SystemConfig(alpha=0.3)
        grid = tuple(db_to_mw(p) for p in PP_GRID_DB)
        for sc in Scenario:
            spec = SweepSpec("P_p", grid, base.replace(scenario=sc), FIG11_TOPOLOGY, oracle, n_mc, seed)
            header, rows = sweep_table(spec, run_sweep(spec))
            header = ["P_p_dB", *header]
            rows = [[db, *r] for db, r in zip(PP_GRID_DB, rows)]
            curves.append((sc.value, header, rows, config_to_mapping(spec.base, FIG11_TOPOLOGY)))
    else:
        for name, base in _opt_curves(fig):
            header, rows = optimal_alpha_table(base, Topology(), THETA_GRID)
            curves.append((name, header, rows, config_to_mapping(base)))

    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, header, rows, meta in curves:
        path = out / f"{fig}_{name}.csv"
        write_csv(path, header, rows, {"figure": fig, "curve": name, **meta})
        written.append(path)
    manifest = {
        "figure": fig,
        "version": __version__,
        "seed": seed,
        "oracle": oracle,
        "n_mc": n_mc if oracle else None,
        "curves": {name: meta for name, _, _, meta in curves},
        "files": [p.name for p in written],
    }
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return [*written, mpath]


# -------------------------------------------------------------- validation

VALIDATION_L = (1, 2, 3)
VALIDATION_ALPHA = (0.2, 0.4, 0.6)
SUPPORTED_PAIRS = tuple(
    (sc, tx)
    for sc in Scenario
    for tx in TxKind
    if not (sc is Scenario.NOISE_DOMINANT and tx is TxKind.EH_ST)
)
ABS_FLOOR = 5e-3


@dataclass(frozen=True)
class ValidationCell:
    scenario: Scenario
    tx_kind: TxKind
    L: int
    alpha: float
    analytic: float
    mc: McEstimate
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.analytic - self.mc.mean) <= self.tolerance


@dataclass(frozen=True)
class ValidationReport:
    cells: list[ValidationCell]
    delta1_variant: Delta1Variant
    adjudication: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cells)

    def failing(self) -> list[ValidationCell]:
        return [c for c in self.cells if not c.passed]


def cell_tolerance(p: float, n: int) -> float:
    return max(3.0 * math.sqrt(p * (1.0 - p) / n), ABS_FLOOR)


def validate(
    n_mc: int = 1_000_000,
    seed: int = DEFAULT_SEED,
    out_path: str | Path | None = None,
    *,
    delta1_variant: Delta1Variant | str = Delta1Variant.PROP2,
    topo: Topology | None = None,
) -> ValidationReport:
    """Analytic secondary outage against Monte Carlo on the acceptance grid.

    Both delta1 definitions are checked on the cells where they matter; the
    report's cells use ``delta1_variant``.
    """
    chosen = Delta1Variant(delta1_variant)
    stats = stats_from_topology(topo or Topology())
    cells: dict[Delta1Variant, list[ValidationCell]] = {v: [] for v in Delta1Variant}
    for sc, tx in SUPPORTED_PAIRS:
        for L in VALIDATION_L:
            for a in VALIDATION_ALPHA:
                cfg = SystemConfig(L=L, alpha=a, scenario=sc, tx_kind=tx)
                b = power_budget(cfg, stats)
                mc = mc_secondary_outage(cfg, stats, b, cfg.zeta_s, n_mc, seed)
                for v in Delta1Variant:
                    p = secondary_outage(cfg.zeta_s, cfg, stats, b, delta1_variant=v)
                    cells[v].append(ValidationCell(sc, tx, L, a, p, mc, cell_tolerance(p, n_mc)))
    adjudication = {v.value: all(c.passed for c in cells[v]) for v in Delta1Variant}
    report = ValidationReport(cells[chosen], chosen, adjudication)
    if out_path is not None:
        write_validation(report, out_path, n_mc, seed)
    return report


def write_validation(report: ValidationReport, path: str | Path, n_mc: int, seed: int) -> None:
    header = ["scenario", "tx_kind", "L", "alpha", "analytic", "mc_mean", "mc_half_width_95", "tolerance", "abs_diff", "pass"]
    rows = [
        [c.scenario.value, c.tx_kind.value, c.L, c.alpha, c.analytic, c.mc.mean, c.mc.half_width_95,
         c.tolerance, abs(c.analytic - c.mc.mean), "PASS" if c.passed else "FAIL"]
        for c in report.cells
    ]
    comments = {
        "delta1_variant": report.delta1_variant.value,
        "samples": n_mc,
        "seed": seed,
        "version": __version__,
        **{f"delta1_{k}_all_pass": v for k, v in report.adjudication.items()},
        "overall": "PASS" if report.passed else "FAIL",
    }
    write_csv(path, header, rows, comments)
