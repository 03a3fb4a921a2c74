"""Sum-rate optimal resource allocation for two-slot DF-relay OFDMA downlinks.

Library layout:
  model      shared value types and the rate function
  gains      per-pair closed forms (equivalent gains, optimal splits)
  assign     maximum-profit perfect matching
  dualsolve  dual-decomposition solver (water-filling + assignment + bisection)
  oracle     brute-force reference solver for small instances
  simkit     random channels and Monte Carlo experiment loops
  figures    matplotlib rendering of experiment summaries
  cli        command-line interface (`relayalloc solve` / `relayalloc experiment`)
"""

__version__ = "0.1.0"

from .assign import solve_assignment
from .dualsolve import (
    DualPoint,
    NonConvergenceError,
    SolverSettings,
    pair_metrics,
    solve,
    solve_lrp,
    waterfill_level,
)
from .gains import (
    PairGains,
    direct_gain,
    equiv_gain,
    equiv_gain_benchmark,
    equiv_gain_novel,
    equiv_gain_table,
    mrc_snr,
    pair_gains_of,
    relay_rate,
)
from .model import (
    Allocation,
    ChannelRealization,
    Direct,
    PairDecision,
    PowerSplit,
    ProtocolKind,
    RelayAided,
    rate_of_snr,
)
from .oracle import oracle_solve, waterfill_total
from .simkit import (
    CellResult,
    ExperimentConfig,
    ExperimentReport,
    GeometryConfig,
    generate_realization,
    run_experiment,
)

__all__ = [
    "Allocation",
    "CellResult",
    "ChannelRealization",
    "Direct",
    "DualPoint",
    "ExperimentConfig",
    "ExperimentReport",
    "GeometryConfig",
    "NonConvergenceError",
    "PairDecision",
    "PairGains",
    "PowerSplit",
    "ProtocolKind",
    "RelayAided",
    "SolverSettings",
    "direct_gain",
    "equiv_gain",
    "equiv_gain_benchmark",
    "equiv_gain_novel",
    "equiv_gain_table",
    "generate_realization",
    "mrc_snr",
    "oracle_solve",
    "pair_gains_of",
    "pair_metrics",
    "rate_of_snr",
    "relay_rate",
    "run_experiment",
    "solve",
    "solve_assignment",
    "solve_lrp",
    "waterfill_level",
    "waterfill_total",
]
