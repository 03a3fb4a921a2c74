"""Random channel generation and Monte Carlo experiment loops.

Geometry: a source and a relay at fixed positions serve users dropped
uniformly in a disc.  Each link is frequency selective: `num_taps`
i.i.d. complex Gaussian taps whose total average power follows a
distance power law, observed through a K-point DFT.  Gains are noise
normalized (sigma^2 = 1), so the power budget is the Ptot/sigma^2 value
directly.

Randomness is counter-based (Philox) keyed by (seed, link id) with the
realization index in the counter block, so realization i is identical
no matter how many realizations run, in what order, or on how many
workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dualsolve import NonConvergenceError, SolverSettings, solve
from .model import ChannelRealization, ProtocolKind

_POSITIONS_STREAM = 0
_SOURCE_RELAY_STREAM = 1


@dataclass(frozen=True)
class GeometryConfig:
    """Node layout and propagation constants.

    Defaults: source at the origin, users in a 50 m disc centered 100 m
    away, relay halfway between, path-loss exponent 3, four Rayleigh
    taps, and reference_gain picked so the source-to-disc-center link
    has unit average gain (1e6 = 100^3).
    """

    source_position: tuple[float, float] = (0.0, 0.0)
    relay_position: tuple[float, float] = (50.0, 0.0)
    user_region_center: tuple[float, float] = (100.0, 0.0)
    user_region_radius: float = 50.0
    path_loss_exponent: float = 3.0
    num_taps: int = 4
    reference_gain: float = 1e6

    def __post_init__(self):
        if self.user_region_radius <= 0:
            raise ValueError("user_region_radius must be > 0")
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be > 0")
        if self.num_taps < 1:
            raise ValueError("num_taps must be >= 1")
        if self.reference_gain <= 0:
            raise ValueError("reference_gain must be > 0")


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo sweep over (K, budget) cells.

    num_subcarriers and snr_budget_db are sweep axes; every (K, budget)
    combination forms a cell evaluated over num_realizations channel
    draws shared by all protocols.  solver.p_tot is a placeholder: each
    cell replaces it with its own linear budget.
    """

    geometry: GeometryConfig
    num_subcarriers: tuple[int, ...] = (32,)
    num_users: int = 5
    snr_budget_db: tuple[float, ...] = (15.0, 20.0, 25.0)
    num_realizations: int = 500
    protocols: tuple[ProtocolKind, ...] = (ProtocolKind.NOVEL, ProtocolKind.BENCHMARK)
    seed: int = 0
    solver: SolverSettings = SolverSettings(p_tot=1.0)

    def __post_init__(self):
        ks = tuple(int(k) for k in self.num_subcarriers)
        object.__setattr__(self, "num_subcarriers", ks)
        object.__setattr__(self, "snr_budget_db", tuple(float(s) for s in self.snr_budget_db))
        object.__setattr__(self, "protocols", tuple(self.protocols))
        if not ks or any(k < 1 for k in ks):
            raise ValueError("num_subcarriers values must be >= 1")
        if self.num_users < 1:
            raise ValueError("num_users must be >= 1")
        if not self.snr_budget_db:
            raise ValueError("need at least one budget")
        if self.num_realizations < 1:
            raise ValueError("num_realizations must be >= 1")
        if not self.protocols:
            raise ValueError("need at least one protocol")
        if len(set(self.protocols)) != len(self.protocols):
            raise ValueError("duplicate protocols")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")


def _stream(seed: int, realization: int, link_id: int) -> np.random.Generator:
    """Independent Philox stream for one link of one realization."""
    bitgen = np.random.Philox(key=[seed, link_id], counter=[0, 0, realization, 0])
    return np.random.Generator(bitgen)


def _link_gains(rng, distance: float, geometry: GeometryConfig, num_subcarriers: int):
    """Squared magnitude of the K-point frequency response of one link."""
    if distance <= 0:
        raise ValueError("link endpoints coincide; distances must be > 0")
    avg_power = geometry.reference_gain * distance ** (-geometry.path_loss_exponent)
    scale = math.sqrt(avg_power / (2.0 * geometry.num_taps))
    taps = scale * (
        rng.standard_normal(geometry.num_taps) + 1j * rng.standard_normal(geometry.num_taps)
    )
    # fold taps modulo K so the DFT keeps total power even when L > K
    folded = np.zeros(num_subcarriers, dtype=complex)
    np.add.at(folded, np.arange(geometry.num_taps) % num_subcarriers, taps)
    return np.abs(np.fft.fft(folded)) ** 2


def generate_realization(
    geometry: GeometryConfig,
    num_subcarriers: int,
    num_users: int,
    seed: int,
    realization: int,
) -> ChannelRealization:
    """Draw one channel realization (user positions plus all link gains).

    Deterministic in (seed, realization) alone: stream 0 draws the user
    positions (radii then angles), stream 1 the source-relay link, then
    one stream per source-user and relay-user link.
    """
    pos_rng = _stream(seed, realization, _POSITIONS_STREAM)
    radii = geometry.user_region_radius * np.sqrt(pos_rng.random(num_users))
    angles = 2.0 * math.pi * pos_rng.random(num_users)
    cx, cy = geometry.user_region_center
    users_x = cx + radii * np.cos(angles)
    users_y = cy + radii * np.sin(angles)

    sx, sy = geometry.source_position
    rx, ry = geometry.relay_position
    d_sr = math.hypot(rx - sx, ry - sy)
    g_sr = _link_gains(
        _stream(seed, realization, _SOURCE_RELAY_STREAM), d_sr, geometry, num_subcarriers
    )

    g_su = np.empty((num_users, num_subcarriers))
    g_ru = np.empty((num_users, num_subcarriers))
    for u in range(num_users):
        d_su = math.hypot(users_x[u] - sx, users_y[u] - sy)
        d_ru = math.hypot(users_x[u] - rx, users_y[u] - ry)
        g_su[u] = _link_gains(
            _stream(seed, realization, 2 + u), d_su, geometry, num_subcarriers
        )
        g_ru[u] = _link_gains(
            _stream(seed, realization, 2 + num_users + u), d_ru, geometry, num_subcarriers
        )
    return ChannelRealization(g_sr=g_sr, g_su=g_su, g_ru=g_ru)


@dataclass(frozen=True)
class CellResult:
    """Aggregated outcome of one (K, budget) cell.

    rates maps each protocol to the per-realization sum rates (NaN where
    the solver did not converge); aggregate statistics skip those
    realizations entirely.
    """

    num_subcarriers: int
    snr_db: float
    rates: dict
    nonconverged: int

    @property
    def realizations(self) -> int:
        return len(next(iter(self.rates.values())))

    def _valid_mask(self) -> np.ndarray:
        mask = np.ones(self.realizations, dtype=bool)
        for values in self.rates.values():
            mask &= np.isfinite(values)
        return mask

    def mean_rate(self, protocol: ProtocolKind) -> float:
        return float(np.mean(self.rates[protocol][self._valid_mask()]))

    def stderr_rate(self, protocol: ProtocolKind) -> float:
        values = self.rates[protocol][self._valid_mask()]
        if values.size < 2:
            return 0.0
        return float(np.std(values, ddof=1) / math.sqrt(values.size))

    def ratios(self) -> np.ndarray | None:
        """Per-realization novel/benchmark ratios, or None if either is absent."""
        if ProtocolKind.NOVEL not in self.rates or ProtocolKind.BENCHMARK not in self.rates:
            return None
        mask = self._valid_mask()
        num = self.rates[ProtocolKind.NOVEL][mask]
        den = self.rates[ProtocolKind.BENCHMARK][mask]
        return num / den

    def mean_ratio(self) -> float | None:
        ratios = self.ratios()
        return None if ratios is None else float(np.mean(ratios))

    def stderr_ratio(self) -> float | None:
        ratios = self.ratios()
        if ratios is None or ratios.size < 2:
            return None if ratios is None else 0.0
        return float(np.std(ratios, ddof=1) / math.sqrt(ratios.size))


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    cells: tuple


def _solve_realization(args):
    """Worker: solve every protocol on one realization's channel."""
    geometry, num_k, num_u, seed, index, protocols, solver = args
    channel = generate_realization(geometry, num_k, num_u, seed, index)
    rates = {}
    failed = False
    for protocol in protocols:
        try:
            rates[protocol] = solve(channel, protocol, solver).sum_rate
        except NonConvergenceError:
            rates[protocol] = math.nan
            failed = True
    return index, rates, failed


def run_cell(
    config: ExperimentConfig, num_subcarriers: int, snr_db: float, workers: int = 1
) -> CellResult:
    """Evaluate one (K, budget) cell of the sweep."""
    p_tot = 10.0 ** (snr_db / 10.0)
    solver = replace(config.solver, p_tot=p_tot)
    jobs = [
        (
            config.geometry,
            num_subcarriers,
            config.num_users,
            config.seed,
            i,
            config.protocols,
            solver,
        )
        for i in range(config.num_realizations)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_realization, jobs, chunksize=8))
    else:
        results = [_solve_realization(job) for job in jobs]

    results.sort(key=lambda item: item[0])
    rates = {
        protocol: np.array([r[1][protocol] for r in results]) for protocol in config.protocols
    }
    nonconverged = sum(1 for r in results if r[2])
    return CellResult(
        num_subcarriers=num_subcarriers, snr_db=snr_db, rates=rates, nonconverged=nonconverged
    )


def run_experiment(
    config: ExperimentConfig, workers: int = 1, cell_callback=None
) -> ExperimentReport:
    """Run the full (K, budget) sweep.

    cell_callback, if given, is invoked with each CellResult as soon as
    the cell completes (the CLI uses it to flush partial output).
    """
    cells = []
    for num_k in config.num_subcarriers:
        for snr_db in config.snr_budget_db:
            cell = run_cell(config, num_k, snr_db, workers=workers)
            cells.append(cell)
            if cell_callback is not None:
                cell_callback(cell)
    return ExperimentReport(config=config, cells=tuple(cells))
