"""Outage, capacity and throughput of an underlay cognitive relay that
powers itself from harvested RF energy, including primary-user interference.
Analytic results are cross-checked by Monte Carlo."""

__version__ = "0.1.0"

from .analytics import (  # noqa: E402
    PerformanceReport,
    ergodic_capacity,
    evaluate,
    secondary_outage,
    throughput,
)
from .config import (  # noqa: E402
    ChannelStats,
    Delta1Variant,
    Mode,
    Scenario,
    SystemConfig,
    Topology,
    TxKind,
    load_config,
    stats_from_topology,
)
from .power import PowerBudget, power_budget, power_outage  # noqa: E402

__all__ = [
    "ChannelStats",
    "Delta1Variant",
    "Mode",
    "PerformanceReport",
    "PowerBudget",
    "Scenario",
    "SystemConfig",
    "Topology",
    "TxKind",
    "ergodic_capacity",
    "evaluate",
    "load_config",
    "power_budget",
    "power_outage",
    "secondary_outage",
    "stats_from_topology",
    "throughput",
]
