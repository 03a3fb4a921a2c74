"""Shared domain types for the two-slot relay-aided OFDMA allocation problem.

All channel gains are noise-normalized (|h|^2 / sigma^2), so powers and
gains multiply directly into SNRs and the noise power never appears
downstream.  Rates are in bits per OFDM symbol (bpos).  Subcarrier and
user indices are 0-based everywhere inside the library; anything
user-facing (CLI reports, CSV) converts to 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

_HALF_INV_LN2 = 0.5 / math.log(2.0)


class ProtocolKind(Enum):
    """Relay-aided transmission flavor.

    NOVEL lets the source transmit together with the relay on the
    second-slot subcarrier (coherent beamforming); BENCHMARK keeps the
    source silent there.
    """

    NOVEL = "novel"
    BENCHMARK = "benchmark"


def rate_of_snr(snr):
    """Achievable rate 0.5 * log2(1 + snr) in bpos.

    Accepts a scalar or ndarray; all entries must be finite and >= 0.
    The 1/2 accounts for the two-slot structure.
    """
    arr = np.asarray(snr, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"snr must be finite and nonnegative, got {snr!r}")
    out = np.log1p(arr) * _HALF_INV_LN2
    return float(out) if np.isscalar(snr) or arr.ndim == 0 else out


def _check_gain_array(name, arr, shape):
    if arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise ValueError(f"{name} contains negative gains")


@dataclass(frozen=True)
class ChannelRealization:
    """Noise-normalized power gains of one channel realization.

    g_sr: (K,) source->relay gain per subcarrier.
    g_su: (U, K) source->user gain per user, subcarrier.
    g_ru: (U, K) relay->user gain per user, subcarrier.
    """

    g_sr: np.ndarray
    g_su: np.ndarray
    g_ru: np.ndarray

    def __post_init__(self):
        g_sr = np.array(self.g_sr, dtype=float)
        g_su = np.atleast_2d(np.array(self.g_su, dtype=float))
        g_ru = np.atleast_2d(np.array(self.g_ru, dtype=float))
        if g_sr.ndim != 1 or g_sr.size == 0:
            raise ValueError("g_sr must be a nonempty 1-D array")
        num_users, num_subcarriers = g_su.shape
        if num_users < 1:
            raise ValueError("need at least one user")
        _check_gain_array("g_sr", g_sr, (g_sr.size,))
        if g_sr.size != num_subcarriers:
            raise ValueError(
                f"g_sr has {g_sr.size} subcarriers but g_su has {num_subcarriers}"
            )
        _check_gain_array("g_su", g_su, (num_users, num_subcarriers))
        _check_gain_array("g_ru", g_ru, (num_users, num_subcarriers))
        for arr in (g_sr, g_su, g_ru):
            arr.setflags(write=False)
        object.__setattr__(self, "g_sr", g_sr)
        object.__setattr__(self, "g_su", g_su)
        object.__setattr__(self, "g_ru", g_ru)

    @property
    def num_subcarriers(self) -> int:
        return self.g_sr.size

    @property
    def num_users(self) -> int:
        return self.g_su.shape[0]


@dataclass(frozen=True)
class PowerSplit:
    """Power triple inside one relay-aided pair.

    p_s1: source power, first-slot subcarrier k.
    p_s2: source power, second-slot subcarrier l (0 under BENCHMARK).
    p_r:  relay power, second-slot subcarrier l.
    """

    p_s1: float
    p_s2: float = 0.0
    p_r: float = 0.0

    def __post_init__(self):
        for name in ("p_s1", "p_s2", "p_r"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")

    @property
    def total(self) -> float:
        return self.p_s1 + self.p_s2 + self.p_r

    def scaled(self, factor: float) -> "PowerSplit":
        return PowerSplit(self.p_s1 * factor, self.p_s2 * factor, self.p_r * factor)


@dataclass(frozen=True)
class RelayAided:
    """Pair carries one relay-aided transmission to `user`."""

    user: int
    split: PowerSplit

    def __post_init__(self):
        if self.user < 0:
            raise ValueError("user index must be >= 0")

    @property
    def total_power(self) -> float:
        return self.split.total


@dataclass(frozen=True)
class Direct:
    """Both slots of the pair used for direct transmission.

    First-slot subcarrier serves `first_user` with `first_power`;
    second-slot subcarrier serves `second_user` with `second_power`.
    The two users may coincide.
    """

    first_user: int
    first_power: float
    second_user: int
    second_power: float

    def __post_init__(self):
        if self.first_user < 0 or self.second_user < 0:
            raise ValueError("user indices must be >= 0")
        for name in ("first_power", "second_power"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")

    @property
    def total_power(self) -> float:
        return self.first_power + self.second_power


PairMode = Union[RelayAided, Direct]


@dataclass(frozen=True)
class PairDecision:
    """One virtual subcarrier pair: (first-slot k, second-slot l, mode)."""

    first_slot_subcarrier: int
    second_slot_subcarrier: int
    mode: PairMode

    def __post_init__(self):
        if self.first_slot_subcarrier < 0 or self.second_slot_subcarrier < 0:
            raise ValueError("subcarrier indices must be >= 0")

    @property
    def total_power(self) -> float:
        return self.mode.total_power


@dataclass(frozen=True)
class Allocation:
    """Complete resource allocation plus its achieved sum rate.

    Invariants checked at construction: first-slot and second-slot
    indices each form a permutation of 0..K-1, and total_power matches
    the sum of the per-decision powers.
    """

    decisions: tuple
    sum_rate: float = 0.0
    total_power: float = 0.0

    def __post_init__(self):
        decisions = tuple(self.decisions)
        object.__setattr__(self, "decisions", decisions)
        if not decisions:
            raise ValueError("allocation needs at least one pair decision")
        k = len(decisions)
        firsts = sorted(d.first_slot_subcarrier for d in decisions)
        seconds = sorted(d.second_slot_subcarrier for d in decisions)
        if firsts != list(range(k)) or seconds != list(range(k)):
            raise ValueError("pair indices do not form permutations of 0..K-1")
        if not math.isfinite(self.sum_rate) or self.sum_rate < 0:
            raise ValueError(f"sum_rate must be finite and >= 0, got {self.sum_rate}")
        component_total = sum(d.total_power for d in decisions)
        if not math.isclose(self.total_power, component_total, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(
                f"total_power {self.total_power} does not match decision sum {component_total}"
            )

    @property
    def num_pairs(self) -> int:
        return len(self.decisions)

    def pairing_permutation(self) -> np.ndarray:
        """perm[k] = second-slot subcarrier paired with first-slot k."""
        perm = np.empty(self.num_pairs, dtype=int)
        for d in self.decisions:
            perm[d.first_slot_subcarrier] = d.second_slot_subcarrier
        return perm
