"""Closed-form per-pair rates, equivalent gains and optimal power splits.

A relay-aided pair (k, l) serving user u behaves, after optimizing how a
total pair power P is split between source and relay, like a single
channel with a scalar equivalent gain G: its maximum rate is
rate_of_snr(G * P).  The two protocols differ only in whether the source
may also transmit on the second-slot subcarrier (coherent beamforming
with the relay) or must stay silent there.

Conventions: the relay-active branch applies when it strictly improves
on keeping all power at the source; on exact ties the non-relay branch
is taken (both give the same gain).  Splits are returned as fractions of
unit total power; callers scale them by whatever pair power they assign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ChannelRealization, PowerSplit, ProtocolKind, rate_of_snr


@dataclass(frozen=True)
class PairGains:
    """The four link gains that determine one (k, l, u) relay-aided pair."""

    g_sr_k: float
    g_su_k: float
    g_su_l: float
    g_ru_l: float

    def __post_init__(self):
        for name in ("g_sr_k", "g_su_k", "g_su_l", "g_ru_l"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")


def mrc_snr(gains: PairGains, split: PowerSplit) -> float:
    """Post-combining SNR at the destination of a relay-aided pair.

    First-slot observation contributes g_su_k * p_s1; the second slot's
    coherent source+relay transmission contributes
    (sqrt(g_su_l * p_s2) + sqrt(g_ru_l * p_r))^2.
    """
    beam_amplitude = math.sqrt(gains.g_su_l * split.p_s2) + math.sqrt(
        gains.g_ru_l * split.p_r
    )
    return gains.g_su_k * split.p_s1 + beam_amplitude**2


def relay_rate(gains: PairGains, split: PowerSplit, protocol: ProtocolKind) -> float:
    """Rate of a relay-aided pair for an explicit power split, in bpos.

    The relay must decode in slot 1 (SNR g_sr_k * p_s1) and the user
    must decode after combining both slots, so the rate is governed by
    the smaller of the two SNRs.
    """
    if protocol is ProtocolKind.BENCHMARK and split.p_s2 > 0:
        raise ValueError("benchmark protocol forbids source power on the second slot")
    relay_snr = gains.g_sr_k * split.p_s1
    return rate_of_snr(min(relay_snr, mrc_snr(gains, split)))


def equiv_gain_benchmark(gains: PairGains) -> tuple[float, PowerSplit]:
    """Equivalent gain and optimal unit-power split, source silent in slot 2.

    Relay-active branch requires min(g_sr_k, g_ru_l) > g_su_k; otherwise
    all power goes to the source's first slot and the pair degrades to
    gain min(g_sr_k, g_su_k).
    """
    g_sr, g_su_k, g_ru = gains.g_sr_k, gains.g_su_k, gains.g_ru_l
    if min(g_sr, g_ru) > g_su_k:
        delta = g_sr - g_su_k
        f_s1 = g_ru / (delta + g_ru)
        gain = g_sr * g_ru / (delta + g_ru)
        return gain, PowerSplit(f_s1, 0.0, 1.0 - f_s1)
    return min(g_sr, g_su_k), PowerSplit(1.0, 0.0, 0.0)


def equiv_gain_novel(gains: PairGains) -> tuple[float, PowerSplit]:
    """Equivalent gain and optimal unit-power split with second-slot beamforming.

    With sum_g = g_su_l + g_ru_l, the relay-active branch requires
    min(g_sr_k, sum_g) > g_su_k and yields gain
    g_sr_k * sum_g / (delta + sum_g), delta = g_sr_k - g_su_k.  Because
    sum_g >= g_ru_l this never falls below the benchmark gain.
    """
    g_sr, g_su_k, g_su_l, g_ru = gains.g_sr_k, gains.g_su_k, gains.g_su_l, gains.g_ru_l
    sum_g = g_su_l + g_ru
    if min(g_sr, sum_g) > g_su_k:
        delta = g_sr - g_su_k
        denom = delta + sum_g
        f_s1 = sum_g / denom
        f_s2 = (g_su_l / sum_g) * (delta / denom)
        f_r = 1.0 - f_s1 - f_s2
        gain = g_sr * sum_g / denom
        return gain, PowerSplit(f_s1, f_s2, max(f_r, 0.0))
    return min(g_sr, g_su_k), PowerSplit(1.0, 0.0, 0.0)


def equiv_gain(gains: PairGains, protocol: ProtocolKind) -> tuple[float, PowerSplit]:
    """Dispatch to the protocol's closed form."""
    if protocol is ProtocolKind.NOVEL:
        return equiv_gain_novel(gains)
    return equiv_gain_benchmark(gains)


def direct_gain(g_su: float) -> float:
    """Effective gain of a direct-mode slot: the link gain itself."""
    if not math.isfinite(g_su) or g_su < 0:
        raise ValueError(f"g_su must be finite and >= 0, got {g_su}")
    return g_su


def pair_gains_of(channel: ChannelRealization, k: int, l: int, u: int) -> PairGains:
    """Collect the four gains of pair (k, l) for user u from a channel."""
    return PairGains(
        g_sr_k=float(channel.g_sr[k]),
        g_su_k=float(channel.g_su[u, k]),
        g_su_l=float(channel.g_su[u, l]),
        g_ru_l=float(channel.g_ru[u, l]),
    )


def equiv_gain_table(channel: ChannelRealization, protocol: ProtocolKind) -> np.ndarray:
    """Equivalent gains for every (user, k, l) triple, shape (U, K, K).

    Vectorized version of `equiv_gain`; entry [u, k, l] equals
    equiv_gain(pair_gains_of(channel, k, l, u), protocol)[0].
    """
    g_sr = channel.g_sr[None, :, None]  # (1, K, 1)
    g_su_k = channel.g_su[:, :, None]  # (U, K, 1)
    if protocol is ProtocolKind.NOVEL:
        second = (channel.g_su + channel.g_ru)[:, None, :]  # (U, 1, K)
    else:
        second = channel.g_ru[:, None, :]
    active = np.minimum(g_sr, second) > g_su_k
    denom = (g_sr - g_su_k) + second
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        relay_gain = g_sr * second / np.where(denom > 0, denom, 1.0)
    return np.where(active, relay_gain, np.minimum(g_sr, g_su_k))
